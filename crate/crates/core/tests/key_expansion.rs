use hpqkd_core::key_pipeline::{bits_to_hex, expand_key, SeedKey, GENERATOR_ID};

#[test]
fn published_vectors() {
    let zero = SeedKey::from_bytes(&[0u8; 8]).unwrap();
    let k = expand_key(&zero, 256).unwrap();
    assert_eq!(k.generator_id, GENERATOR_ID);
    assert_eq!(
        bits_to_hex(&k.bits),
        "bc3fb8329310622b530a82464f42ad1590ef89cf9011b6ec29e9c53a244e21db"
    );

    let counting: Vec<u8> = (0u8..32).collect();
    let k = expand_key(&SeedKey::from_bytes(&counting).unwrap(), 256).unwrap();
    assert_eq!(
        bits_to_hex(&k.bits),
        "a820f306047897e9ed94a09a9518174df032f71e918dfd98e043521959927def"
    );
}

#[test]
fn shorter_expansions_are_prefixes() {
    let seed = SeedKey::from_bytes(b"prefix-check").unwrap();
    let long = expand_key(&seed, 4099).unwrap();
    for n in [1, 7, 64, 1000, 4098] {
        assert_eq!(expand_key(&seed, n).unwrap().bits, long.bits[..n]);
    }
}

#[test]
fn seed_length_is_part_of_the_key() {
    // Same bytes, different bit length: a trailing zero bit must not collide.
    let mut bits = SeedKey::from_bytes(&[0xa5; 9]).unwrap().bits().to_vec();
    let a = expand_key(&SeedKey::new(bits.clone()).unwrap(), 128).unwrap();
    bits.push(false);
    let b = expand_key(&SeedKey::new(bits).unwrap(), 128).unwrap();
    assert_ne!(a.bits, b.bits);
    assert_ne!(a.seed_fingerprint, b.seed_fingerprint);
}

#[test]
fn short_seeds_are_rejected() {
    assert!(SeedKey::from_bytes(&[1u8; 7]).is_err());
}
