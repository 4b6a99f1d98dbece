//! Exact rational solution of small integer linear systems.
//!
//! The system is solved modulo a run of word-sized primes, lifted by CRT,
//! and turned back into rationals by reconstruction. A candidate is only
//! returned after `A x = b` has been checked in exact arithmetic, so the
//! modular shortcuts can fail but never lie.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Sparse integer system: `sum_j rows[i][j].1 * x[rows[i][j].0] = rhs[i]`.
#[derive(Debug, Clone)]
pub struct IntSystem {
    pub rows: Vec<Vec<(usize, i64)>>,
    pub rhs: Vec<i64>,
}

impl IntSystem {
    pub fn len(&self) -> usize {
        self.rhs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rhs.is_empty()
    }

    fn satisfied_by(&self, x: &[BigRational]) -> bool {
        self.rows.iter().zip(&self.rhs).all(|(row, &b)| {
            let mut s = BigRational::zero();
            for &(j, a) in row {
                s += &x[j] * BigInt::from(a);
            }
            s == BigRational::from_integer(BigInt::from(b))
        })
    }
}

/// Largest dense system accepted; elimination is cubic per prime.
pub const MAX_UNKNOWNS: usize = 1500;

pub fn solve_rational(sys: &IntSystem) -> Result<Vec<BigRational>> {
    let m = sys.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    if m > MAX_UNKNOWNS {
        return Err(Error::TooLarge(format!(
            "{m} unknowns exceeds the exact-solver limit of {MAX_UNKNOWNS}"
        )));
    }
    let mut primes = PrimeSource::new();
    let mut modulus = BigInt::one();
    let mut residues: Vec<BigInt> = vec![BigInt::zero(); m];
    let mut used = 0usize;
    let mut next_attempt = 4usize;
    let mut singular_run = 0;
    // Generous cap: Hadamard's bound for these systems is far below this.
    while used < 4000 {
        let p = primes.next_prime();
        let Some(xp) = solve_mod(sys, p) else {
            singular_run += 1;
            if singular_run == 8 {
                return Err(Error::Solver("system is singular".into()));
            }
            continue;
        };
        singular_run = 0;
        crt_extend(&mut residues, &mut modulus, &xp, p);
        used += 1;
        if used >= next_attempt {
            if let Some(x) = reconstruct_all(&residues, &modulus) {
                if sys.satisfied_by(&x) {
                    return Ok(x);
                }
            }
            next_attempt = used + used / 2 + 1;
        }
    }
    Err(Error::Solver("exact solve did not stabilise".into()))
}

struct PrimeSource {
    next: u64,
}

impl PrimeSource {
    fn new() -> Self {
        Self { next: (1 << 31) - 1 }
    }

    fn next_prime(&mut self) -> u64 {
        loop {
            let c = self.next;
            self.next -= 2;
            if is_prime(c) {
                return c;
            }
        }
    }
}

fn is_prime(c: u64) -> bool {
    if c < 2 || c.is_multiple_of(2) {
        return c == 2;
    }
    let mut d = 3;
    while d * d <= c {
        if c.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r
}

fn inv_mod(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

/// Dense Gauss-Jordan elimination over GF(p); `None` if singular.
fn solve_mod(sys: &IntSystem, p: u64) -> Option<Vec<u64>> {
    let m = sys.len();
    let w = m + 1;
    let red = |v: i64| -> u64 { v.rem_euclid(p as i64) as u64 };
    let mut a = vec![0u64; m * w];
    for (i, row) in sys.rows.iter().enumerate() {
        for &(j, v) in row {
            a[i * w + j] = (a[i * w + j] + red(v)) % p;
        }
        a[i * w + m] = red(sys.rhs[i]);
    }
    for c in 0..m {
        let piv = (c..m).find(|&r| a[r * w + c] != 0)?;
        if piv != c {
            for t in 0..w {
                a.swap(piv * w + t, c * w + t);
            }
        }
        let inv = inv_mod(a[c * w + c], p);
        for t in c..w {
            a[c * w + t] = a[c * w + t] * inv % p;
        }
        let (head, tail) = a.split_at_mut(c * w);
        let (pivot_row, rest) = tail.split_at_mut(w);
        let eliminate = |row: &mut [u64]| {
            let f = row[c];
            if f != 0 {
                let g = p - f;
                for t in c..w {
                    row[t] = (row[t] + g * pivot_row[t]) % p;
                }
            }
        };
        head.chunks_mut(w).for_each(eliminate);
        rest.chunks_mut(w).for_each(eliminate);
    }
    Some((0..m).map(|i| a[i * w + m]).collect())
}

fn crt_extend(res: &mut [BigInt], modulus: &mut BigInt, xp: &[u64], p: u64) {
    let pb = BigInt::from(p);
    let m_mod_p = (&*modulus % &pb).to_u64_digits().1.first().copied().unwrap_or(0);
    let inv = inv_mod(m_mod_p, p);
    for (r, &v) in res.iter_mut().zip(xp) {
        let r_mod_p = (&*r % &pb).to_u64_digits().1.first().copied().unwrap_or(0);
        let delta = (v + p - r_mod_p) % p * inv % p;
        *r += &*modulus * BigInt::from(delta);
    }
    *modulus *= pb;
}

fn reconstruct_all(res: &[BigInt], modulus: &BigInt) -> Option<Vec<BigRational>> {
    let bound = (modulus >> 1u32).sqrt();
    res.iter().map(|r| reconstruct(r, modulus, &bound)).collect()
}

/// Finds `a/b` with `|a|, b <= bound` and `a = r b (mod m)`.
fn reconstruct(r: &BigInt, m: &BigInt, bound: &BigInt) -> Option<BigRational> {
    let (mut r0, mut r1) = (m.clone(), r.mod_floor(m));
    let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
    while &r1 > bound {
        let q = &r0 / &r1;
        let r2 = &r0 - &q * &r1;
        let t2 = &t0 - &q * &t1;
        r0 = std::mem::replace(&mut r1, r2);
        t0 = std::mem::replace(&mut t1, t2);
    }
    if t1.is_zero() || t1.abs() > *bound {
        return None;
    }
    if t1.sign() == Sign::Minus {
        r1 = -r1;
        t1 = -t1;
    }
    if !r1.gcd(&t1).is_one() {
        return None;
    }
    Some(BigRational::new(r1, t1))
}

pub fn to_f64(x: &BigRational) -> f64 {
    // Scale so both parts fit comfortably before converting.
    let shift = x.numer().bits().max(x.denom().bits()).saturating_sub(1000);
    let n = x.numer() >> shift;
    let d = x.denom() >> shift;
    use num_traits::ToPrimitive;
    let nf = n.to_f64().unwrap_or(f64::NAN);
    let df = d.to_f64().unwrap_or(f64::NAN);
    if df == 0.0 { f64::INFINITY } else { nf / df }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn two_by_two() {
        // 2x + y = 1, x - 3y = 2  ->  x = 5/7, y = -3/7
        let sys = IntSystem {
            rows: vec![vec![(0, 2), (1, 1)], vec![(0, 1), (1, -3)]],
            rhs: vec![1, 2],
        };
        assert_eq!(solve_rational(&sys).unwrap(), vec![q(5, 7), q(-3, 7)]);
    }

    #[test]
    fn ruin_durations_are_exact_integers() {
        // 2 t_x - t_{x-1} - t_{x+1} = 2 on 1..n-1, t_0 = t_n = 0.
        let n = 30usize;
        let m = n - 1;
        let rows = (0..m)
            .map(|i| {
                let mut r = vec![(i, 2)];
                if i > 0 {
                    r.push((i - 1, -1));
                }
                if i + 1 < m {
                    r.push((i + 1, -1));
                }
                r
            })
            .collect();
        let sys = IntSystem { rows, rhs: vec![2; m] };
        let x = solve_rational(&sys).unwrap();
        for (i, v) in x.iter().enumerate() {
            let pos = (i + 1) as i64;
            assert_eq!(*v, q(pos * (n as i64 - pos), 1));
        }
    }

    #[test]
    fn singular_system_is_an_error() {
        let sys = IntSystem {
            rows: vec![vec![(0, 1), (1, 1)], vec![(0, 2), (1, 2)]],
            rhs: vec![1, 3],
        };
        assert!(solve_rational(&sys).is_err());
    }

    #[test]
    fn reconstruction_roundtrip() {
        let m = BigInt::from(1_000_000_007u64) * BigInt::from(998_244_353u64);
        let bound = (&m >> 1u32).sqrt();
        let e = BigInt::from(2839).extended_gcd(&m);
        let r = (BigInt::from(-617) * e.x).mod_floor(&m);
        assert_eq!(reconstruct(&r, &m, &bound), Some(q(-1234, 5678)));
    }

    #[test]
    fn float_conversion() {
        assert_eq!(to_f64(&q(3, 4)), 0.75);
    }
}
