package org.samples;

import java.util.ArrayDeque;
import java.util.Deque;
import java.util.List;
import java.util.Map;

/** Shunting-yard evaluation of infix arithmetic. */
public class Evaluator {
    private static final Map<String, Integer> PRECEDENCE = Map.of(
        "+", 1, "-", 1,
        "*", 2, "/", 2, "%", 2,
        "^", 3
    );

    private final Map<String, Double> variables;

    public Evaluator(Map<String, Double> variables) {
        this.variables = variables;
    }

    public double evaluate(String expression) {
        List<Tokenizer.Token> tokens = new Tokenizer(expression).tokenize();
        Deque<Double> values = new ArrayDeque<>();
        Deque<String> ops = new ArrayDeque<>();
        for (Tokenizer.Token t : tokens) {
            switch (t.kind()) {
                case NUMBER:
                    values.push(Double.parseDouble(t.text()));
                    break;
                case IDENT:
                    Double v = variables.get(t.text());
                    if (v == null) {
                        throw new IllegalArgumentException("unknown variable " + t.text());
                    }
                    values.push(v);
                    break;
                case LPAREN:
                    ops.push("(");
                    break;
                case RPAREN:
                    while (!ops.isEmpty() && !ops.peek().equals("(")) {
                        apply(values, ops.pop());
                    }
                    ops.pop();
                    break;
                default:
                    String op = t.text();
                    while (!ops.isEmpty() && !ops.peek().equals("(")
                            && (PRECEDENCE.get(ops.peek()) > PRECEDENCE.get(op)
                                || (PRECEDENCE.get(ops.peek()).equals(PRECEDENCE.get(op)) && !op.equals("^")))) {
                        apply(values, ops.pop());
                    }
                    ops.push(op);
            }
        }
        while (!ops.isEmpty()) {
            apply(values, ops.pop());
        }
        return values.pop();
    }

    private static void apply(Deque<Double> values, String op) {
        double b = values.pop();
        double a = values.pop();
        values.push(switch (op) {
            case "+" -> a + b;
            case "-" -> a - b;
            case "*" -> a * b;
            case "/" -> a / b;
            case "%" -> a % b;
            case "^" -> Math.pow(a, b);
            default -> throw new IllegalStateException(op);
        });
    }
}
