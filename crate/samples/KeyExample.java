import java.security.SecureRandom;
import javax.crypto.Cipher;
import javax.crypto.KeyGenerator;
import javax.crypto.SecretKey;

public class KeyExample {
    public static void main(String[] args) throws Exception {
        /*? anchor: SecureRandom
        title: Secure random numbers
        step: 1

        Use a `SecureRandom` rather than `Random` for anything related to
        keys. The default constructor picks the strongest provider.
        ---
        within: strongest provider
        title: Providers

        The provider list is configured in `java.security`.
        */
        SecureRandom random = new SecureRandom();

        /*? anchor: KeyGenerator.getInstance("AES")
        title: Key generation
        step: 2

        `AES` keys default to 128 bits.
        */
        KeyGenerator generator = KeyGenerator.getInstance("AES");
        /*? anchor: 256

        The key size in bits. */
        generator.init(256, random);
        SecretKey key = generator.generateKey();

        /*? anchor: "AES/GCM/NoPadding"
        include: cipher-modes
        */
        Cipher cipher = Cipher.getInstance("AES/GCM/NoPadding");
        cipher.init(Cipher.ENCRYPT_MODE, key);
    }
}
