use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::ToPrimitive;

use super::FactoringError;

/// Largest trial divisor tried for inputs wider than 64 bits.
pub const TRIAL_DIVISION_BOUND: u64 = 1 << 25;

/// Smallest-factor-first trial division. Reaches every 64-bit input, and any
/// wider input with a factor below [`TRIAL_DIVISION_BOUND`].
pub fn factor_oracle(n: &BigUint) -> Result<(BigUint, BigUint), FactoringError> {
    if let Some(small) = n.to_u64() {
        return factor_u64(small)
            .map(|(p, q)| (BigUint::from(p), BigUint::from(q)))
            .ok_or_else(|| FactoringError::OracleOutOfReach(n.clone()));
    }
    let mut d = 3u64;
    while d < TRIAL_DIVISION_BOUND {
        let (quot, rem) = n.div_rem(&BigUint::from(d));
        if rem == BigUint::from(0u32) {
            return Ok((BigUint::from(d), quot));
        }
        d += 2;
    }
    Err(FactoringError::OracleOutOfReach(n.clone()))
}

fn factor_u64(n: u64) -> Option<(u64, u64)> {
    if n < 4 {
        return None;
    }
    if n % 2 == 0 {
        return Some((2, n / 2));
    }
    let mut d = 3u64;
    while d <= n / d {
        if n % d == 0 {
            return Some((d, n / d));
        }
        d += 2;
    }
    None
}

/// True when `n` is a product of exactly two primes.
pub fn is_biprime(n: u64) -> bool {
    match factor_u64(n) {
        Some((p, q)) => factor_u64(p).is_none() && factor_u64(q).is_none() && p > 1,
        None => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(n: u64) -> (u64, u64) {
        let (p, q) = factor_oracle(&BigUint::from(n)).unwrap();
        (p.to_u64().unwrap(), q.to_u64().unwrap())
    }

    #[test]
    fn known_instances() {
        assert_eq!(f(297491), (521, 571));
        assert_eq!(f(15), (3, 5));
        assert_eq!(f(3127), (53, 59));
        assert_eq!(f(6557), (79, 83));
        assert_eq!(f(1099551473989), (1048589, 1048601));
    }

    #[test]
    fn primes_are_out_of_reach() {
        assert!(matches!(
            factor_oracle(&BigUint::from(7919u32)),
            Err(FactoringError::OracleOutOfReach(_))
        ));
    }

    #[test]
    fn wide_input_with_small_factor() {
        let n = BigUint::from(1_000_003u64) * BigUint::parse_bytes(b"340282366920938463463374607431768211507", 10).unwrap();
        let (p, _) = factor_oracle(&n).unwrap();
        assert_eq!(p, BigUint::from(1_000_003u64));
    }

    #[test]
    fn biprime_detection() {
        assert!(is_biprime(15));
        assert!(is_biprime(9));
        assert!(!is_biprime(27));
        assert!(!is_biprime(13));
    }
}
