package org.samples;

import java.io.IOException;
import java.io.UncheckedIOException;
import java.nio.charset.StandardCharsets;
import java.nio.file.Files;
import java.nio.file.Path;
import java.util.Map;
import java.util.TreeMap;
import java.util.stream.Collectors;

public class TextReport {
    private static final String TEMPLATE = """
        Report for %s
        =============
        lines:  %d
        words:  %d
        """;

    public static String render(Path file) {
        try {
            String text = Files.readString(file, StandardCharsets.UTF_8);
            long lines = text.lines().count();
            long words = text.lines()
                .flatMap(l -> java.util.Arrays.stream(l.trim().split("\\s+")))
                .filter(w -> !w.isEmpty())
                .count();
            return String.format(TEMPLATE, file.getFileName(), lines, words);
        } catch (IOException e) {
            throw new UncheckedIOException(e);
        }
    }

    public static Map<String, Long> histogram(String text) {
        return text.chars()
            .filter(Character::isLetter)
            .mapToObj(c -> String.valueOf((char) Character.toLowerCase(c)))
            .collect(Collectors.groupingBy(s -> s, TreeMap::new, Collectors.counting()));
    }

    /* A block comment spanning
       several lines, with { unbalanced ( delimiters inside. */
    public static char mostCommon(String text) {
        Map<String, Long> h = histogram(text);
        char best = '\0';
        long count = -1;
        for (var e : h.entrySet()) {
            if (e.getValue() > count) {
                count = e.getValue();
                best = e.getKey().charAt(0);
            }
        }
        return best;
    }
}
