//! Property suites cross-checking every question oracle against an
//! independent brute-force reference. Zero tolerance: any mismatch is a bug.

use llmcoin_core::questionbank::oracle::{
    base_convert, gcd, gcd_lcm, is_prime, modpow, render_radix,
};
use llmcoin_core::questionbank::{generate_suite, grade, oracle_answer, CategoryMix};
use proptest::prelude::*;

/// Reference: multiply out the power one step at a time.
fn modpow_by_repeated_multiplication(base: u64, exponent: u64, modulus: u64) -> u64 {
    let m = u128::from(modulus);
    let mut acc: u128 = 1 % m;
    for _ in 0..exponent {
        acc = acc * u128::from(base) % m;
    }
    acc as u64
}

/// Reference: trial division all the way up.
fn is_prime_by_trial_division(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn modpow_matches_repeated_multiplication(
        base in 0u64..10_000,
        exponent in 0u64..10_000,
        modulus in 1u64..100_000,
    ) {
        prop_assert_eq!(
            modpow(base, exponent, modulus).unwrap(),
            modpow_by_repeated_multiplication(base, exponent, modulus)
        );
    }

    #[test]
    fn primality_matches_trial_division(n in 0u64..1_000_000) {
        prop_assert_eq!(is_prime(n), is_prime_by_trial_division(n));
    }

    #[test]
    fn gcd_lcm_product_identity(a in 1u64..1_000_000, b in 1u64..1_000_000) {
        let (g, l) = gcd_lcm(a, b).unwrap();
        prop_assert_eq!(a % g, 0);
        prop_assert_eq!(b % g, 0);
        prop_assert_eq!(u128::from(g) * u128::from(l), u128::from(a) * u128::from(b));
        prop_assert_eq!(l % a, 0);
        prop_assert_eq!(l % b, 0);
    }

    #[test]
    fn base_render_parse_round_trip(n in 0u64..(1u64 << 63), radix in 2u32..=16) {
        let digits = render_radix(n, radix);
        prop_assert_eq!(base_convert(&digits, radix).unwrap(), n);
    }

    #[test]
    fn gcd_is_commutative_and_divides(a in 1u64..u64::MAX, b in 1u64..u64::MAX) {
        let g = gcd(a, b);
        prop_assert_eq!(g, gcd(b, a));
        prop_assert_eq!(a % g, 0);
        prop_assert_eq!(b % g, 0);
    }
}

/// Every generated question grades its own canonical answer as correct, and
/// the recorded answer matches a fresh oracle evaluation.
#[test]
fn generated_suites_are_self_consistent() {
    for seed in [1u64, 99, 4242] {
        let suite = generate_suite(seed, 100, &CategoryMix::default_hundred()).unwrap();
        for q in &suite {
            assert_eq!(oracle_answer(q).unwrap(), q.answer, "q{} seed {seed}", q.id);
            let canonical = llmcoin_core::questionbank::canonical_answer_text(&q.answer);
            let graded = grade(q, 1, &canonical);
            assert!(graded.correct, "q{} seed {seed}: {canonical}", q.id);
        }
    }
}

/// Miller-Rabin is exact across known hard composites (strong pseudoprimes
/// to small bases) and large primes near the u64 boundary.
#[test]
fn primality_known_hard_cases() {
    let composites = [
        2_047u64,          // strong pseudoprime base 2
        1_373_653,         // bases 2,3
        25_326_001,        // bases 2,3,5
        3_215_031_751,     // bases 2,3,5,7
        3_825_123_056_546_413_051, // bases 2..23
        341_550_071_728_321,
    ];
    for c in composites {
        assert!(!is_prime(c), "{c} is composite");
    }
    let primes = [
        2_147_483_647u64,            // 2^31 - 1
        2_305_843_009_213_693_951,   // 2^61 - 1
        18_446_744_073_709_551_557,  // largest u64 prime
    ];
    for p in primes {
        assert!(is_prime(p), "{p} is prime");
    }
}
