//! Local solvability of the descent covers
//! `C: b1 z1^2 - b2 z2^2 = m t^2,  b1 z1^2 - b1 b2 z3^2 = -3 m t^2`.
//!
//! Closed-form tables cover every place except `v = 2` for even `m`; that
//! place goes through [`padic_solvable`], a residue-tree search with a
//! Hensel certificate. The same search cross-checks the tables in tests.

use crate::arith::{leg, sqfree_mul, FactoredSquareFree};

/// A place of `Q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Place {
    Infinity,
    Prime(u64),
}

/// Unit part of `x` at the odd prime `p` (one factor of `p` removed at most;
/// inputs are square-free).
#[inline]
fn unit_at(x: i64, p: u64) -> i64 {
    let p = p as i64;
    if x % p == 0 {
        x / p
    } else {
        x
    }
}

#[inline]
fn mod_pos(x: i64, m: i64) -> i64 {
    x.rem_euclid(m)
}

/// `[-1/x]` for odd `x`: 0 iff `x ≡ 1 mod 4`.
#[inline]
fn sym_minus_one(x: i64) -> bool {
    mod_pos(x, 4) != 1
}

/// `[2/x]` for odd `x`: 0 iff `x ≡ ±1 mod 8`.
#[inline]
fn sym_two(x: i64) -> bool {
    !matches!(mod_pos(x, 8), 1 | 7)
}

/// Table lookup; `None` where no closed form is available (`v = 2`, `m` even).
pub fn local_ok_table(m: &FactoredSquareFree, b1: i64, b2: i64, place: Place) -> Option<bool> {
    let mv = m.value();
    match place {
        Place::Infinity => Some(if mv > 0 { b1 * b2 > 0 } else { b2 > 0 }),
        Place::Prime(2) => {
            if m.has2() {
                return None;
            }
            let b1_odd = b1 % 2 != 0;
            Some(match mod_pos(mv, 8) {
                3 | 7 => b1_odd && mod_pos(b2, 4) == 1,
                5 => mod_pos(b1, 4) == 1 && b2 % 2 != 0,
                _ => {
                    if !b1_odd {
                        return Some(false);
                    }
                    let v2 = b2 % 2 == 0;
                    let b2o = if v2 { b2 / 2 } else { b2 };
                    let x0 = sym_minus_one(b1);
                    let x1 = sym_two(b1);
                    let x2 = sym_minus_one(b2o);
                    // [2/b2'] does not enter the kernel conditions
                    !(x0 ^ x1 ^ x2) && !(x0 ^ v2)
                }
            })
        }
        Place::Prime(3) => {
            let d1 = b1 % 3 == 0;
            let d2 = b2 % 3 == 0;
            if !m.has3() {
                if d2 {
                    return Some(false);
                }
                Some(if d1 { !leg(-b2 * mv, 3) } else { !leg(b2, 3) })
            } else {
                Some(match (d1, d2) {
                    (false, false) => !leg(b1, 3) && !leg(b2, 3),
                    (true, false) => !leg(sqfree_mul(mv, b1), 3) && !leg(b2, 3),
                    (false, true) => {
                        !leg(unit_at(-mv, 3) * b1, 3) && !leg(sqfree_mul(-mv, b2), 3)
                    }
                    (true, true) => {
                        !leg(-(b1 / 3), 3) && !leg(sqfree_mul(-mv, b2), 3)
                    }
                })
            }
        }
        Place::Prime(p) => {
            debug_assert!(mv % p as i64 == 0, "prime {p} outside the bad set");
            let d1 = b1 % p as i64 == 0;
            let d2 = b2 % p as i64 == 0;
            Some(match (d1, d2) {
                (false, false) => !leg(b1, p) && !leg(b2, p),
                (true, false) => !leg(sqfree_mul(mv, b1), p) && !leg(b2, p),
                (false, true) => !leg(-3 * b1, p) && !leg(sqfree_mul(-mv, b2), p),
                (true, true) => {
                    !leg(-3 * sqfree_mul(mv, b1), p) && !leg(sqfree_mul(-mv, b2), p)
                }
            })
        }
    }
}

fn val(mut x: i128, p: i128) -> u32 {
    if x == 0 {
        return u32::MAX;
    }
    let mut v = 0;
    while x % p == 0 {
        x /= p;
        v += 1;
    }
    v
}

struct Cover {
    b1: i128,
    b2: i128,
    m: i128,
}

impl Cover {
    fn eval(&self, x: &[i128; 4]) -> [i128; 2] {
        let (s0, s1, s2, s3) = (x[0] * x[0], x[1] * x[1], x[2] * x[2], x[3] * x[3]);
        [
            self.b1 * s0 - self.b2 * s1 - self.m * s3,
            self.b1 * s0 - self.b1 * self.b2 * s2 + 3 * self.m * s3,
        ]
    }

    fn jacobian(&self, x: &[i128; 4]) -> [[i128; 4]; 2] {
        [
            [2 * self.b1 * x[0], -2 * self.b2 * x[1], 0, -2 * self.m * x[3]],
            [2 * self.b1 * x[0], 0, -2 * self.b1 * self.b2 * x[2], 6 * self.m * x[3]],
        ]
    }

    /// Hensel certificate: `min v(F) > 2 e`, `e` the least valuation of a
    /// 2x2 minor of the Jacobian in the chart's free columns.
    fn certified(&self, x: &[i128; 4], free: &[usize; 3], p: i128) -> bool {
        let f = self.eval(x);
        let vf = val(f[0], p).min(val(f[1], p));
        let j = self.jacobian(x);
        let mut e = u32::MAX;
        for a in 0..3 {
            for b in a + 1..3 {
                let (ca, cb) = (free[a], free[b]);
                let minor = j[0][ca] * j[1][cb] - j[0][cb] * j[1][ca];
                e = e.min(val(minor, p));
            }
        }
        e != u32::MAX && (vf == u32::MAX || vf as u64 > 2 * e as u64)
    }
}

/// Decides `C(Q_p) ≠ ∅` by lifting residues of primitive points mod `p^j`,
/// `j ≤ max_exp`. Returns `None` when the tree neither dies nor certifies.
pub fn padic_solvable(p: u64, b1: i64, b2: i64, m: i64, max_exp: u32) -> Option<bool> {
    let cover = Cover { b1: b1 as i128, b2: b2 as i128, m: m as i128 };
    let pp = p as i128;
    let mut undecided = false;
    for chart in 0..4 {
        let free: [usize; 3] = match chart {
            0 => [1, 2, 3],
            1 => [0, 2, 3],
            2 => [0, 1, 3],
            _ => [0, 1, 2],
        };
        let point = |u: &[i128; 3]| {
            let mut x = [0i128; 4];
            x[chart] = 1;
            for (slot, &c) in free.iter().enumerate() {
                x[c] = u[slot];
            }
            x
        };
        let mut level: Vec<[i128; 3]> = vec![[0, 0, 0]];
        let mut pj: i128 = 1;
        let mut solved = false;
        for _ in 0..max_exp {
            if level.iter().any(|u| cover.certified(&point(u), &free, pp)) {
                solved = true;
                break;
            }
            let next_mod = pj * pp;
            let mut next = Vec::new();
            for u in &level {
                for d0 in 0..pp {
                    for d1 in 0..pp {
                        for d2 in 0..pp {
                            let cand = [u[0] + d0 * pj, u[1] + d1 * pj, u[2] + d2 * pj];
                            let f = cover.eval(&point(&cand));
                            if f[0] % next_mod == 0 && f[1] % next_mod == 0 {
                                next.push(cand);
                            }
                        }
                    }
                }
            }
            level = next;
            pj = next_mod;
            if level.is_empty() {
                break;
            }
        }
        if solved {
            return Some(true);
        }
        if !level.is_empty() && !level.iter().any(|u| cover.certified(&point(u), &free, pp)) {
            undecided = true;
        } else if !level.is_empty() {
            return Some(true);
        }
    }
    if undecided {
        None
    } else {
        Some(false)
    }
}
