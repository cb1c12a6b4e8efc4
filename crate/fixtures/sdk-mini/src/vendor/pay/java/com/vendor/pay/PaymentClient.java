package com.vendor.pay;

import android.Manifest;
import android.annotation.RequiresPermission;

/**
 * Client for the vendor payment service.
 */
public class PaymentClient {
    private long mBalanceCents;

    /**
     * Charges {@code amountCents} to the account behind {@code token}.
     * The caller also needs {@link android.Manifest.permission#INTERNET}.
     */
    @RequiresPermission(allOf = {"com.vendor.permission.PAY", Manifest.permission.INTERNET})
    public boolean requestPayment(long amountCents, String token) {
        return nativeChecksum(token.getBytes()) != 0;
    }

    /** Refunds are checked server side, see {@linkplain Manifest.permission#INTERNET}. */
    public void cancelPayment(String token) {
        mBalanceCents = 0;
    }

    public long getBalanceCents() {
        return mBalanceCents;
    }

    private native int nativeChecksum(byte[] data);
}
