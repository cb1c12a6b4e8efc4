package android.util;

/** String helpers with no platform dependencies. */
public final class TextUtilsLite {
    private TextUtilsLite() {}

    public static boolean isEmpty(CharSequence text) {
        return text == null || text.length() == 0;
    }

    public static String join(String delimiter, Object... parts) {
        StringBuilder sb = new StringBuilder();
        for (int i = 0; i < parts.length; i++) {
            if (i > 0) sb.append(delimiter);
            sb.append(parts[i]);
        }
        return sb.toString();
    }

    public static String capitalize(String s) {
        if (isEmpty(s)) {
            return s;
        }
        return Character.toUpperCase(s.charAt(0)) + s.substring(1);
    }

    public static int countLines(String text) {
        int n = 1;
        for (char c : text.toCharArray()) {
            if (c == '\n') n++;
        }
        return n;
    }
}
