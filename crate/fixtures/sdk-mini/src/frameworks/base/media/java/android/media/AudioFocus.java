package android.media;

public class AudioFocus {
    public static final int GAIN = 1;
    private float mVolume = 1.0f;
    private int mFocus;

    public int requestFocus(int focusType) {
        mFocus = focusType;
        return GAIN;
    }

    public void abandonFocus() {
        mFocus = 0;
    }

    public void setVolume(float volume) {
        mVolume = Math.max(0f, Math.min(1f, volume));
    }

    public record FocusInfo(int type, String owner) {
        public boolean isTransient() {
            return type != GAIN;
        }
    }
}
