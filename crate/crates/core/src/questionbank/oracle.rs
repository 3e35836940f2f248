//! Exact integer oracles behind every question category.
//!
//! Everything here is deterministic and total over its stated domain; answers
//! computed at generation time are recomputable from the question params
//! alone.

use super::{Answer, Category, Question, QuestionError};

/// base^exponent mod modulus by square-and-multiply, O(log exponent) steps.
/// Intermediate products are widened to u128 so they cannot overflow.
pub fn modpow(base: u64, exponent: u64, modulus: u64) -> Result<u64, QuestionError> {
    if modulus == 0 {
        return Err(QuestionError::ZeroModulus);
    }
    let m = u128::from(modulus);
    let mut result: u128 = 1 % m;
    let mut b = u128::from(base) % m;
    let mut e = exponent;
    while e > 0 {
        if e & 1 == 1 {
            result = result * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    Ok(result as u64)
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    (u128::from(a) * u128::from(b) % u128::from(m)) as u64
}

/// Exact primality for any u64: trial division for small n, then
/// deterministic Miller-Rabin with the 12-witness set known to be complete
/// for all 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    const SMALL_PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &SMALL_PRIMES {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    if n < 41 * 41 {
        return true;
    }

    let trailing = (n - 1).trailing_zeros();
    let d = (n - 1) >> trailing;
    'witness: for &a in &SMALL_PRIMES {
        let mut x = modpow(a, d, n).expect("n >= 2");
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..trailing {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Euclidean gcd plus lcm with divide-before-multiply; `gcd * lcm = a * b`
/// holds exactly.
pub fn gcd_lcm(a: u64, b: u64) -> Result<(u64, u64), QuestionError> {
    if a == 0 || b == 0 {
        return Err(QuestionError::Domain("gcd_lcm needs positive operands".into()));
    }
    let g = gcd(a, b);
    let lcm = (a / g)
        .checked_mul(b)
        .ok_or(QuestionError::Overflow("lcm"))?;
    Ok((g, lcm))
}

/// Positional value of `digits` in `radix` (2..=16). Digits 0-9 then A-F,
/// case-insensitive.
pub fn base_convert(digits: &str, radix: u32) -> Result<u64, QuestionError> {
    if !(2..=16).contains(&radix) {
        return Err(QuestionError::InvalidRadix(radix));
    }
    if digits.is_empty() {
        return Err(QuestionError::EmptyDigits);
    }
    let mut value: u64 = 0;
    for ch in digits.chars() {
        let d = ch
            .to_digit(16)
            .filter(|d| *d < radix)
            .ok_or(QuestionError::InvalidDigit { digit: ch, radix })?;
        value = value
            .checked_mul(u64::from(radix))
            .and_then(|v| v.checked_add(u64::from(d)))
            .ok_or(QuestionError::Overflow("base_convert"))?;
    }
    Ok(value)
}

/// Renders `value` in `radix` with uppercase digits; inverse of
/// [`base_convert`].
pub fn render_radix(mut value: u64, radix: u32) -> String {
    assert!((2..=16).contains(&radix));
    const DIGITS: &[u8; 16] = b"0123456789ABCDEF";
    if value == 0 {
        return "0".to_string();
    }
    let mut out = Vec::new();
    while value > 0 {
        out.push(DIGITS[(value % u64::from(radix)) as usize]);
        value /= u64::from(radix);
    }
    out.reverse();
    String::from_utf8(out).expect("ascii digits")
}

/// Floor of the square root, exact for all u64.
pub fn isqrt(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut r = (n as f64).sqrt() as u64;
    // float estimate can be off by one either way near 2^53 and above
    while u128::from(r) * u128::from(r) > u128::from(n) {
        r -= 1;
    }
    while u128::from(r + 1) * u128::from(r + 1) <= u128::from(n) {
        r += 1;
    }
    r
}

pub fn is_perfect_square(n: u64) -> bool {
    let r = isqrt(n);
    r * r == n
}

fn param(q: &Question, idx: usize) -> Result<i64, QuestionError> {
    q.params.get(idx).copied().ok_or_else(|| QuestionError::BadParams {
        category: q.category,
        detail: format!("missing param {idx}"),
    })
}

fn nonneg(q: &Question, idx: usize) -> Result<u64, QuestionError> {
    let v = param(q, idx)?;
    u64::try_from(v).map_err(|_| QuestionError::BadParams {
        category: q.category,
        detail: format!("param {idx} must be nonnegative, got {v}"),
    })
}

/// Dispatches to the category oracle and recomputes the exact answer from
/// `q.params`. Same question, same answer, always.
pub fn oracle_answer(q: &Question) -> Result<Answer, QuestionError> {
    match q.category {
        Category::ArithmeticEval => {
            // (a*b + c*d) - f^g
            let (a, b, c, d) = (param(q, 0)?, param(q, 1)?, param(q, 2)?, param(q, 3)?);
            let f = param(q, 4)?;
            let g = u32::try_from(param(q, 5)?).map_err(|_| QuestionError::BadParams {
                category: q.category,
                detail: "exponent must fit u32".into(),
            })?;
            let value = i128::from(a) * i128::from(b) + i128::from(c) * i128::from(d)
                - i128::from(f).pow(g);
            Ok(Answer::Integer(value))
        }
        Category::ModularPow => {
            let (b, e, m) = (nonneg(q, 0)?, nonneg(q, 1)?, nonneg(q, 2)?);
            Ok(Answer::Integer(i128::from(modpow(b, e, m)?)))
        }
        Category::BaseConversion => {
            let value = nonneg(q, 0)?;
            let radix = u32::try_from(nonneg(q, 1)?).map_err(|_| QuestionError::BadParams {
                category: q.category,
                detail: "radix out of range".into(),
            })?;
            if !(2..=16).contains(&radix) {
                return Err(QuestionError::InvalidRadix(radix));
            }
            Ok(Answer::Integer(i128::from(value)))
        }
        Category::Divisibility => {
            let (n, d1, d2) = (nonneg(q, 0)?, nonneg(q, 1)?, nonneg(q, 2)?);
            if d1 == 0 || d2 == 0 {
                return Err(QuestionError::BadParams {
                    category: q.category,
                    detail: "divisors must be positive".into(),
                });
            }
            Ok(Answer::YesNo(n % d1 == 0 && n % d2 == 0))
        }
        Category::Primality => Ok(Answer::YesNo(is_prime(nonneg(q, 0)?))),
        Category::GcdLcm => {
            let (a, b, which) = (nonneg(q, 0)?, nonneg(q, 1)?, param(q, 2)?);
            let (g, l) = gcd_lcm(a, b)?;
            match which {
                0 => Ok(Answer::Integer(i128::from(g))),
                1 => Ok(Answer::Integer(i128::from(l))),
                other => Err(QuestionError::BadParams {
                    category: q.category,
                    detail: format!("selector must be 0 (gcd) or 1 (lcm), got {other}"),
                }),
            }
        }
        Category::LinearEquation => {
            // a*x + b = c with an integral root by construction
            let (a, b, c) = (param(q, 0)?, param(q, 1)?, param(q, 2)?);
            if a == 0 {
                return Err(QuestionError::BadParams {
                    category: q.category,
                    detail: "zero coefficient".into(),
                });
            }
            if (c - b) % a != 0 {
                return Err(QuestionError::BadParams {
                    category: q.category,
                    detail: format!("root of {a}x + {b} = {c} is not integral"),
                });
            }
            Ok(Answer::Integer(i128::from((c - b) / a)))
        }
        Category::PerfectSquare => Ok(Answer::YesNo(is_perfect_square(nonneg(q, 0)?))),
        Category::Determinant => {
            let dim = param(q, 0)?;
            match dim {
                2 => {
                    let e: Vec<i128> = (1..=4)
                        .map(|i| param(q, i).map(i128::from))
                        .collect::<Result<_, _>>()?;
                    Ok(Answer::Integer(e[0] * e[3] - e[1] * e[2]))
                }
                3 => {
                    let e: Vec<i128> = (1..=9)
                        .map(|i| param(q, i).map(i128::from))
                        .collect::<Result<_, _>>()?;
                    // cofactor expansion along the first row
                    let det = e[0] * (e[4] * e[8] - e[5] * e[7])
                        - e[1] * (e[3] * e[8] - e[5] * e[6])
                        + e[2] * (e[3] * e[7] - e[4] * e[6]);
                    Ok(Answer::Integer(det))
                }
                other => Err(QuestionError::BadParams {
                    category: q.category,
                    detail: format!("unsupported dimension {other}"),
                }),
            }
        }
    }
}
