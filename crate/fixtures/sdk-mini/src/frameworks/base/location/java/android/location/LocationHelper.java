package android.location;

import android.Manifest;
import android.annotation.RequiresPermission;
import android.content.Context;

/**
 * Convenience wrappers around the location service.
 * Most methods here need {@link android.Manifest.permission} constants granted at runtime.
 */
public class LocationHelper {
    private final Context mContext;
    private final LocationManager mManager;

    public LocationHelper(Context context) {
        mContext = context;
        mManager = context.getSystemService(LocationManager.class);
    }

    /** Whether the app already holds fine location access. */
    public boolean hasLocationPermission(Context ctx) {
        return ctx.checkSelfPermission(Manifest.permission.ACCESS_FINE_LOCATION) == 0;
    }

    public boolean isGPSEnabled() {
        return mManager.isProviderEnabled(LocationManager.GPS_PROVIDER);
    }

    /**
     * Returns the most recent fix from {@code provider}.
     * Needs {@link android.Manifest.permission#ACCESS_FINE_LOCATION} or
     * {@link android.Manifest.permission#ACCESS_COARSE_LOCATION}.
     */
    @RequiresPermission(anyOf = {Manifest.permission.ACCESS_COARSE_LOCATION, Manifest.permission.ACCESS_FINE_LOCATION})
    public Location getLastKnownLocation(String provider) {
        return mManager.getLastKnownLocation(provider);
    }

    /** See {@link android.Manifest.permission_group#LOCATION} for how these are grouped. */
    public static float distanceBetween(double lat1, double lon1, double lat2, double lon2) {
        return (float) Math.hypot(lat2 - lat1, lon2 - lon1);
    }

    /** Receives fixes as they arrive. */
    public static class Listener {
        private int mUpdates;

        public void onLocationChanged(Location location) {
            mUpdates++;
        }

        public int getUpdateCount() {
            return mUpdates;
        }
    }
}
