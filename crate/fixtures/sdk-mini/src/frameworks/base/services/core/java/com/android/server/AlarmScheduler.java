package com.android.server;

import java.util.HashMap;
import java.util.Map;

public class AlarmScheduler {
    public enum AlarmType {
        RTC(true),
        ELAPSED(false);

        private final boolean mWakeup;

        AlarmType(boolean wakeup) {
            mWakeup = wakeup;
        }

        public boolean isWakeup() {
            return mWakeup;
        }
    }

    private final Map<String, Long> mAlarms = new HashMap<>();

    public void schedule(long triggerAtMillis, String tag) {
        mAlarms.put(tag, triggerAtMillis);
    }

    public void cancel(String tag) {
        mAlarms.remove(tag);
    }

    public long getNextAlarmMillis() {
        long next = Long.MAX_VALUE;
        for (long t : mAlarms.values()) {
            next = Math.min(next, t);
        }
        return next;
    }
}
