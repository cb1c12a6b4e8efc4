package android.os;

import android.annotation.RequiresPermission;

/**
 * Thin bridge to the native power HAL.
 */
public final class PowerBridge {
    private static final String TAG = "PowerBridge";
    private boolean mScreenOn;

    PowerBridge() {
        mScreenOn = true;
    }

    /**
     * Acquires a partial wake lock in the native layer.
     * Callers must hold {@link android.Manifest.permission#WAKE_LOCK}.
     */
    @RequiresPermission(android.Manifest.permission.WAKE_LOCK)
    public static native void nativeAcquireWakeLock(String tag);

    /** Milliseconds since boot, excluding deep sleep. */
    public static native long nativeUptime();

    // @RequiresPermission(Manifest.permission.DEVICE_POWER)
    public boolean isScreenOn() {
        return mScreenOn;
    }

    public void setDebugName(String name) {
        // {@link android.Manifest.permission#DUMP} is only needed for dumpsys
        Log.d(TAG, name);
    }
}
