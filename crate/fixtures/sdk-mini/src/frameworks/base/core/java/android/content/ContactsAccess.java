package android.content;

/**
 * Read and write access to the contacts provider.
 */
public interface ContactsAccess {
    /** Formerly required {@code android.Manifest.permission#READ_CONTACTS}. */
    Cursor queryContacts(String selection);

    /** @RequiresPermission is declared on the provider, not on this interface. */
    int deleteContact(long id);

    default boolean isSupported() {
        return true;
    }
}
