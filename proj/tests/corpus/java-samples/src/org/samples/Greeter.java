package org.samples;

import java.util.List;
import java.util.Locale;

/** Greets people in their own language: héllo, 你好, привет. */
public class Greeter {
    enum Tongue { ENGLISH, FRENCH, CHINESE, RUSSIAN }

    private final Tongue tongue;

    public Greeter(Tongue tongue) {
        this.tongue = tongue;
    }

    public String greet(String name) {
        String salutation = switch (tongue) {
            case ENGLISH -> "Hello";
            case FRENCH -> "Bonjour";
            case CHINESE -> "你好";
            case RUSSIAN -> "Привет";
        };
        return salutation + ", " + name.toUpperCase(Locale.ROOT) + "!";
    }

    public static void main(String[] args) {
        List<String> names = List.of("Zoë", "Łukasz", "Ñandú");
        for (Tongue t : Tongue.values()) {
            Greeter g = new Greeter(t);
            names.forEach(n -> System.out.println(g.greet(n)));
        }
    }
}
