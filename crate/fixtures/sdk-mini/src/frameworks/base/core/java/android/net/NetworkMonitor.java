package android.net;

import static android.Manifest.permission.ACCESS_NETWORK_STATE;

import android.annotation.RequiresPermission;
import java.util.List;
import java.util.Map;

public class NetworkMonitor {
    private final ConnectivityService mService;

    NetworkMonitor(ConnectivityService service) {
        mService = service;
    }

    /**
     * True when the default network has validated internet access.
     * Requires {@link android.Manifest.permission#ACCESS_NETWORK_STATE}.
     */
    @RequiresPermission(ACCESS_NETWORK_STATE)
    public boolean isInternetConnected() {
        return mService.getActiveNetwork() != null;
    }

    /**
     * Name of the active network, or null.
     * Callers used to need the READ_PHONE_STATE permission for this; they no longer do.
     */
    public String getActiveNetworkName() {
        return mService.getActiveNetworkName();
    }

    protected int createRequestId(String tag) {
        return tag.hashCode();
    }

    public List<String> listInterfaces(Map<String, Integer> filters) {
        return mService.listInterfaces(filters);
    }
}
