package com.android.settings;

import android.annotation.RequiresPermission;

public class WifiToggle {
    private int mState = 0;

    @RequiresPermission(android.Manifest.permission.CHANGE_WIFI_STATE)
    public boolean setWifiEnabled(boolean enabled) {
        mState = enabled ? 3 : 1;
        return true;
    }

    public int getWifiState() {
        return mState;
    }
}
