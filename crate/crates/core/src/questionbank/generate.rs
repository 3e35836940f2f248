//! Seeded suite generation.

use super::oracle::{self, is_prime, render_radix};
use super::{Answer, Category, Question, QuestionError};
use crate::rng::SplitMix64;
use std::collections::{BTreeMap, HashSet};

/// How many questions each category contributes to a suite.
#[derive(Debug, Clone, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub struct CategoryMix(pub BTreeMap<Category, u32>);

impl CategoryMix {
    /// Default 100-item mix: 28 primality, 8 divisibility, 20 base
    /// conversion, 16 modular exponentiation, 12 gcd/lcm, 8 linear
    /// equations, 4 arithmetic evaluation, 4 perfect squares. Determinants
    /// are available but off by default.
    pub fn default_hundred() -> Self {
        Self(BTreeMap::from([
            (Category::Primality, 28),
            (Category::Divisibility, 8),
            (Category::BaseConversion, 20),
            (Category::ModularPow, 16),
            (Category::GcdLcm, 12),
            (Category::LinearEquation, 8),
            (Category::ArithmeticEval, 4),
            (Category::PerfectSquare, 4),
        ]))
    }

    /// Scales the default mix to another total using largest remainders.
    pub fn scaled_default(count: u32) -> Self {
        let base = Self::default_hundred();
        if count == 100 {
            return base;
        }
        let mut allotted: Vec<(Category, u32, u32)> = base
            .0
            .iter()
            .map(|(cat, n)| {
                let exact = u64::from(*n) * u64::from(count);
                ((*cat), (exact / 100) as u32, (exact % 100) as u32)
            })
            .collect();
        let mut total: u32 = allotted.iter().map(|(_, n, _)| n).sum();
        // hand out the shortfall to the largest remainders, ties by category order
        allotted.sort_by(|a, b| b.2.cmp(&a.2).then(a.0.cmp(&b.0)));
        let n = allotted.len();
        let mut i = 0;
        while total < count {
            allotted[i % n].1 += 1;
            total += 1;
            i += 1;
        }
        Self(
            allotted
                .into_iter()
                .filter(|(_, n, _)| *n > 0)
                .map(|(c, n, _)| (c, n))
                .collect(),
        )
    }

    pub fn single(category: Category, count: u32) -> Self {
        Self(BTreeMap::from([(category, count)]))
    }

    pub fn total(&self) -> u32 {
        self.0.values().sum()
    }
}

const MAX_DRAWS_PER_ITEM: u32 = 100_000;

/// Generates `count` distinct questions, deterministically from `seed`.
/// Every answer is verified by the category oracle at generation time.
pub fn generate_suite(
    seed: u64,
    count: u32,
    mix: &CategoryMix,
) -> Result<Vec<Question>, QuestionError> {
    if mix.total() != count {
        return Err(QuestionError::MixMismatch {
            got: mix.total(),
            expected: count,
        });
    }
    let mut master = SplitMix64::new(seed).derive("suite");
    let mut seen: HashSet<(Category, Vec<i64>)> = HashSet::new();
    let mut suite = Vec::with_capacity(count as usize);
    let mut next_id: u32 = 1;

    for (&category, &n) in &mix.0 {
        for _ in 0..n {
            let mut drawn = None;
            for _ in 0..MAX_DRAWS_PER_ITEM {
                let qseed = master.next_u64();
                let params = draw_params(category, qseed);
                if seen.contains(&(category, params.clone())) {
                    continue;
                }
                drawn = Some((qseed, params));
                break;
            }
            let (qseed, params) = drawn.ok_or_else(|| QuestionError::Generation {
                category,
                detail: "parameter range too narrow to yield distinct items".into(),
            })?;
            seen.insert((category, params.clone()));

            let mut q = Question {
                id: next_id,
                category,
                text: String::new(),
                answer: Answer::YesNo(false),
                params,
                seed: qseed,
            };
            q.answer = oracle::oracle_answer(&q)?;
            q.text = render_text(category, &q.params)?;
            suite.push(q);
            next_id += 1;
        }
    }
    Ok(suite)
}

/// Draws category params from the question's own seed, so any single item is
/// reproducible without replaying the whole suite.
fn draw_params(category: Category, qseed: u64) -> Vec<i64> {
    let mut rng = SplitMix64::new(qseed);
    match category {
        Category::ArithmeticEval => {
            let a = rng.next_range(2, 40) as i64;
            let b = rng.next_range(2, 40) as i64;
            let c = rng.next_range(2, 40) as i64;
            let d = rng.next_range(2, 40) as i64;
            let f = rng.next_range(2, 12) as i64;
            let g = rng.next_range(2, 3) as i64;
            vec![a, b, c, d, f, g]
        }
        Category::ModularPow => {
            let base = rng.next_range(2, 19) as i64;
            let exp = rng.next_range(50, 400) as i64;
            let modulus = rng.next_range(31, 110) as i64;
            vec![base, exp, modulus]
        }
        Category::BaseConversion => {
            let radix = rng.next_range(2, 16);
            // between 5 and 9 digits in the chosen radix
            let lo = radix.pow(4);
            let hi = radix
                .checked_pow(9)
                .map(|h| h - 1)
                .unwrap_or(u64::MAX)
                .min(999_999_999);
            let value = rng.next_range(lo, hi.max(lo));
            vec![value as i64, radix as i64]
        }
        Category::Divisibility => {
            const DIVISORS: [u64; 9] = [3, 7, 9, 11, 13, 17, 19, 21, 23];
            let d1 = DIVISORS[rng.next_below(9) as usize];
            let mut d2 = DIVISORS[rng.next_below(9) as usize];
            while d2 == d1 {
                d2 = DIVISORS[rng.next_below(9) as usize];
            }
            let want_yes = rng.next_below(2) == 0;
            let n = if want_yes {
                let k = rng.next_range(1000 / (d1 * d2).max(1) + 1, 999_999 / (d1 * d2));
                d1 * d2 * k
            } else {
                loop {
                    let n = rng.next_range(1_000, 999_999);
                    if !(n % d1 == 0 && n % d2 == 0) {
                        break n;
                    }
                }
            };
            vec![n as i64, d1 as i64, d2 as i64]
        }
        Category::Primality => {
            // operands capped at 9 decimal digits
            let want_prime = rng.next_below(2) == 0;
            loop {
                let mut n = rng.next_range(1_000_003, 999_999_999) | 1;
                if want_prime {
                    while !is_prime(n) {
                        n += 2;
                    }
                    break vec![n as i64];
                }
                if n % 5 != 0 && !is_prime(n) {
                    break vec![n as i64];
                }
            }
        }
        Category::GcdLcm => {
            let g = [1, 2, 3, 4, 6, 7, 9, 14][rng.next_below(8) as usize];
            let a = g * rng.next_range(20, 400);
            let b = g * rng.next_range(20, 400);
            let which = rng.next_below(2) as i64;
            vec![a as i64, b as i64, which]
        }
        Category::LinearEquation => {
            let a = rng.next_range(2, 20) as i64;
            let x = rng.next_range(2, 99) as i64;
            let b = rng.next_range(1, 200) as i64;
            vec![a, b, a * x + b]
        }
        Category::PerfectSquare => {
            let want_square = rng.next_below(2) == 0;
            let n = if want_square {
                let m = rng.next_range(100, 989);
                m * m
            } else {
                loop {
                    let n = rng.next_range(10_000, 999_999);
                    if !oracle::is_perfect_square(n) {
                        break n;
                    }
                }
            };
            vec![n as i64]
        }
        Category::Determinant => {
            let dim = if rng.next_below(2) == 0 { 2 } else { 3 };
            let mut params = vec![dim as i64];
            for _ in 0..(dim * dim) {
                params.push(rng.next_range(0, 18) as i64 - 9);
            }
            params
        }
    }
}

/// Deterministic plain-text rendering of a question's params.
pub fn render_text(category: Category, params: &[i64]) -> Result<String, QuestionError> {
    let bad = |detail: &str| QuestionError::BadParams {
        category,
        detail: detail.into(),
    };
    let get = |i: usize| params.get(i).copied().ok_or_else(|| bad("missing param"));
    Ok(match category {
        Category::ArithmeticEval => format!(
            "Evaluate ({} * {} + {} * {}) - {}^{}. Give an integer.",
            get(0)?,
            get(1)?,
            get(2)?,
            get(3)?,
            get(4)?,
            get(5)?
        ),
        Category::ModularPow => format!(
            "What is {}^{} mod {}? Give an integer.",
            get(0)?,
            get(1)?,
            get(2)?
        ),
        Category::BaseConversion => {
            let value = u64::try_from(get(0)?).map_err(|_| bad("negative value"))?;
            let radix = u32::try_from(get(1)?).map_err(|_| bad("bad radix"))?;
            if !(2..=16).contains(&radix) {
                return Err(QuestionError::InvalidRadix(radix));
            }
            format!(
                "Convert {} (base {}) to decimal. Give an integer.",
                render_radix(value, radix),
                radix
            )
        }
        Category::Divisibility => format!(
            "Is {} divisible by both {} and {}? Answer Yes or No.",
            get(0)?,
            get(1)?,
            get(2)?
        ),
        Category::Primality => format!("Is {} a prime number? Answer Yes or No.", get(0)?),
        Category::GcdLcm => {
            let op = match get(2)? {
                0 => "gcd",
                1 => "lcm",
                _ => return Err(bad("selector must be 0 or 1")),
            };
            format!("What is {}({}, {})? Give an integer.", op, get(0)?, get(1)?)
        }
        Category::LinearEquation => format!(
            "Solve for x: {}x + {} = {}. Give an integer.",
            get(0)?,
            get(1)?,
            get(2)?
        ),
        Category::PerfectSquare => {
            format!("Is {} a perfect square? Answer Yes or No.", get(0)?)
        }
        Category::Determinant => {
            let dim = get(0)?;
            let n = usize::try_from(dim).map_err(|_| bad("bad dimension"))?;
            if params.len() != 1 + n * n || !(n == 2 || n == 3) {
                return Err(bad("entry count does not match dimension"));
            }
            let rows: Vec<String> = (0..n)
                .map(|r| {
                    let row: Vec<String> = (0..n)
                        .map(|c| params[1 + r * n + c].to_string())
                        .collect();
                    format!("[{}]", row.join(", "))
                })
                .collect();
            format!(
                "What is the determinant of the {n}x{n} matrix [{}]? Give an integer.",
                rows.join(", ")
            )
        }
    })
}
