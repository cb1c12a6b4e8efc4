package android.hardware;

import android.Manifest;
import android.annotation.RequiresPermission;

public class CameraDevice {
    public static final int FACING_BACK = 0;
    private int mId = -1;
    private boolean mRecording;

    /**
     * Opens the camera with the given id.
     * @see android.Manifest.permission#CAMERA
     */
    public void open(int id) {
        mId = id;
    }

    /**
     * Starts recording video to {@code path}. Requires
     * {@link android.Manifest.permission#CAMERA}; audio capture is implied.
     */
    @RequiresPermission(Manifest.permission.CAMERA)
    public void startRecording(String path) throws java.io.IOException {
        mRecording = true;
    }

    public void stopRecording() {
        /* @RequiresPermission(Manifest.permission.RECORD_AUDIO) */
        mRecording = false;
    }

    public void setPreviewSize(int width, int height) {
        String hint = "@RequiresPermission(Manifest.permission.CAMERA)";
    }

    public int getFacing() {
        return FACING_BACK;
    }
}
