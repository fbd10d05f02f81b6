//! Exact joint moments of `S`, `F_r` and `T_m` over all `(r!)^n` ranking configurations.
//!
//! Everything is accumulated on doubled integer column sums `C_j = 2Σ_i ρ_i(j)`; with
//! `κ = 3/(r(r+1)n)` one has `S_j² = κC_j²`, `F_r = κΣC_j²` and `T_1² = κU²/4` where
//! `U = Σ_l C_l · 2ρ_1(l)`.

use std::collections::BTreeMap;

use serde::Serialize;

use super::enumerate::fold_configurations;
use super::rational::{int, rat, Rational};
use super::ExactMomentTable;
use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    count: i128,
    c2: i128,
    c1c2: i128,
    c4: i128,
    c6: i128,
    c2c2: i128,
    q: i128,
    q2: i128,
    u: i128,
    u2: i128,
    u4: i128,
}

impl Sums {
    fn merge(self, o: Sums) -> Sums {
        Sums {
            count: self.count + o.count,
            c2: self.c2 + o.c2,
            c1c2: self.c1c2 + o.c1c2,
            c4: self.c4 + o.c4,
            c6: self.c6 + o.c6,
            c2c2: self.c2c2 + o.c2c2,
            q: self.q + o.q,
            q2: self.q2 + o.q2,
            u: self.u + o.u,
            u2: self.u2 + o.u2,
            u4: self.u4 + o.u4,
        }
    }
}

/// Exact joint moments for one `(r, n)`. `t_mean_sq` is `(E[T_m])²`, kept rational.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointMoments {
    pub r: usize,
    pub n: usize,
    #[serde(serialize_with = "super::serialize_rational")]
    pub s2: Rational,
    #[serde(serialize_with = "super::serialize_rational")]
    pub s1s2: Rational,
    #[serde(serialize_with = "super::serialize_rational")]
    pub s4: Rational,
    #[serde(serialize_with = "super::serialize_rational")]
    pub s6: Rational,
    #[serde(serialize_with = "super::serialize_rational")]
    pub s2s2: Rational,
    #[serde(serialize_with = "super::serialize_rational")]
    pub f: Rational,
    #[serde(serialize_with = "super::serialize_rational")]
    pub f2: Rational,
    #[serde(serialize_with = "super::serialize_rational")]
    pub var_f: Rational,
    #[serde(serialize_with = "super::serialize_rational")]
    pub t_mean_sq: Rational,
    #[serde(serialize_with = "super::serialize_rational")]
    pub t2: Rational,
    #[serde(serialize_with = "super::serialize_rational")]
    pub t4: Rational,
}

/// `κ = 3/(r(r+1)n)`, the factor turning squared doubled sums into squared scores.
pub fn kappa(r: usize, n: usize) -> Rational {
    rat(3, (r * (r + 1) * n) as i128)
}

pub fn exact_joint_moments(r: usize, n: usize) -> Result<JointMoments> {
    if !(2..=10).contains(&r) {
        return Err(domain(format!("joint enumeration needs 2 <= r <= 10, got {r}")));
    }
    let s = fold_configurations(
        r,
        n,
        1,
        Sums::default,
        |acc, cfg| {
            let c = cfg.doubled_sums();
            let (c1, c2) = (c[0] as i128, c[1] as i128);
            let q: i128 = c.iter().map(|&v| (v * v) as i128).sum();
            let u: i128 = c.iter().zip(cfg.doubled_row(0)).map(|(&a, &b)| (a * b) as i128).sum();
            let c1sq = c1 * c1;
            let u2 = u * u;
            acc.count += 1;
            acc.c2 += c1sq;
            acc.c1c2 += c1 * c2;
            acc.c4 += c1sq * c1sq;
            acc.c6 += c1sq * c1sq * c1sq;
            acc.c2c2 += c1sq * c2 * c2;
            acc.q += q;
            acc.q2 += q * q;
            acc.u += u;
            acc.u2 += u2;
            acc.u4 += u2 * u2;
        },
        Sums::merge,
    )?;
    let total = int(s.count);
    let mean = |v: i128| int(v) / &total;
    let k = kappa(r, n);
    let k2 = &k * &k;
    let f = &k * mean(s.q);
    let f2 = &k2 * mean(s.q2);
    let u_mean = mean(s.u);
    Ok(JointMoments {
        r,
        n,
        s2: &k * mean(s.c2),
        s1s2: &k * mean(s.c1c2),
        s4: &k2 * mean(s.c4),
        s6: &k2 * &k * mean(s.c6),
        s2s2: &k2 * mean(s.c2c2),
        var_f: &f2 - &f * &f,
        f,
        f2,
        t_mean_sq: &k * &u_mean * &u_mean / int(4),
        t2: &k * mean(s.u2) / int(4),
        t4: &k2 * mean(s.u4) / int(16),
    })
}

/// `joint_moments` as a labelled table.
pub fn joint_moments(r: usize, n: usize) -> Result<ExactMomentTable> {
    let m = exact_joint_moments(r, n)?;
    let mut entries = BTreeMap::new();
    for (key, v) in [
        ("E[S_j^2]", &m.s2),
        ("E[S_jS_k]", &m.s1s2),
        ("E[S_j^4]", &m.s4),
        ("E[S_j^6]", &m.s6),
        ("E[S_j^2S_k^2]", &m.s2s2),
        ("E[F]", &m.f),
        ("E[F^2]", &m.f2),
        ("Var(F)", &m.var_f),
        ("E[T_m]^2", &m.t_mean_sq),
        ("E[T_m^2]", &m.t2),
        ("E[T_m^4]", &m.t4),
    ] {
        entries.insert(key.to_string(), v.clone());
    }
    Ok(ExactMomentTable { r, n: Some(n), entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn examples_r3_n2() {
        let t = joint_moments(3, 2).unwrap();
        assert_eq!(t.get("E[F]").unwrap(), &int(2));
        assert_eq!(t.get("E[F^2]").unwrap(), &int(6));
        assert_eq!(t.get("E[T_m^2]").unwrap(), &int(3));
    }

    #[test]
    fn s4_example_r4_n4() {
        assert_eq!(exact_joint_moments(4, 4).unwrap().s4, rat(1197, 800));
    }

    #[test]
    fn domain_and_budget() {
        assert!(matches!(joint_moments(11, 1), Err(Error::Domain(_))));
        assert!(matches!(joint_moments(1, 3), Err(Error::Domain(_))));
        assert!(matches!(joint_moments(5, 4), Err(Error::Budget { .. })));
    }

    #[test]
    fn single_trial_is_deterministic_t() {
        // With n = 1, T_1 = c Σ ρ² is constant, so E[T²] = (E[T])².
        for r in 2..=6 {
            let m = exact_joint_moments(r, 1).unwrap();
            assert_eq!(m.t2, m.t_mean_sq);
            assert_eq!(m.t4, &m.t2 * &m.t2);
        }
    }
}
