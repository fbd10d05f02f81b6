//! Closed-form moment identities and inequalities checked against exact enumeration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::enumerate::{check_budget, configuration_count};
use super::joint::exact_joint_moments;
use super::law::{central_binomial_probability, exact_law};
use super::rational::{abs, int, pow, rat, to_f64, Rational};
use super::single::SingleTrialLaw;
use crate::error::{domain, Result};
use crate::report::Report;

fn eq(rep: &mut Report, name: &str, r: usize, n: Option<usize>, lhs: Rational, rhs: Rational) {
    rep.push(name, r, n, lhs == rhs, &lhs, &rhs);
}

fn le(rep: &mut Report, name: &str, r: usize, n: Option<usize>, lhs: Rational, rhs: Rational) {
    rep.push(format!("{name} (<=)"), r, n, lhs <= rhs, &lhs, &rhs);
}

fn le_f64(rep: &mut Report, name: &str, r: usize, n: Option<usize>, lhs: f64, rhs: f64) {
    rep.push(format!("{name} (<=)"), r, n, lhs <= rhs, format!("{lhs:.9e}"), format!("{rhs:.9e}"));
}

fn prod(xs: &[&Rational]) -> Rational {
    xs.iter().fold(int(1), |acc, x| acc * *x)
}

/// Single-trial closed forms at `r`.
pub struct ClosedForms {
    r: i128,
}

impl ClosedForms {
    pub fn new(r: usize) -> Self {
        Self { r: r as i128 }
    }
    pub fn rho2(&self) -> Rational {
        rat(self.r * self.r - 1, 12)
    }
    pub fn rho_rho(&self) -> Rational {
        rat(-(self.r + 1), 12)
    }
    pub fn rho4(&self) -> Rational {
        let r = self.r;
        rat((r * r - 1) * (3 * r * r - 7), 240)
    }
    pub fn rho3_rho(&self) -> Rational {
        let r = self.r;
        rat(-(r + 1) * (3 * r * r - 7), 240)
    }
    pub fn rho2_rho2(&self) -> Rational {
        let r = self.r;
        rat((r + 1) * (5 * r * r * r - 9 * r * r - 5 * r + 21), 720)
    }
    pub fn rho2_rho_rho(&self) -> Rational {
        let r = self.r;
        rat(-(r - 3) * (r + 1) * (5 * r + 7), 720)
    }
    pub fn rho_rho_rho_rho_abs(&self) -> Rational {
        let r = self.r;
        rat((r + 1) * (5 * r + 7), 240)
    }
    pub fn rho6(&self) -> Rational {
        let r = self.r;
        rat((r * r - 1) * (3 * r.pow(4) - 18 * r * r + 31), 1344)
    }
}

fn single_trial_formulas(rep: &mut Report, law: &SingleTrialLaw) {
    let r = law.r();
    let cf = ClosedForms::new(r);
    let zero = int(0);
    eq(rep, "E[ρ(l)] = 0", r, None, law.monomial(&[1]), zero.clone());
    eq(rep, "E[ρ(l)^3] = 0", r, None, law.monomial(&[3]), zero.clone());
    eq(rep, "E[ρ(l)^2ρ(j)] = 0", r, None, law.monomial(&[2, 1]), zero.clone());
    eq(rep, "E[ρ(l)^2] = (r^2-1)/12", r, None, law.monomial(&[2]), cf.rho2());
    eq(rep, "E[ρ(l)ρ(j)] = -(r+1)/12", r, None, law.monomial(&[1, 1]), cf.rho_rho());
    eq(rep, "E[ρ(l)^4] = (r^2-1)(3r^2-7)/240", r, None, law.monomial(&[4]), cf.rho4());
    eq(rep, "E[ρ(l)^3ρ(j)] = -(r+1)(3r^2-7)/240", r, None, law.monomial(&[3, 1]), cf.rho3_rho());
    eq(
        rep,
        "E[ρ(l)^2ρ(j)^2] = (r+1)(5r^3-9r^2-5r+21)/720",
        r,
        None,
        law.monomial(&[2, 2]),
        cf.rho2_rho2(),
    );
    eq(rep, "E[ρ(l)^6] = (r^2-1)(3r^4-18r^2+31)/1344", r, None, law.monomial(&[6]), cf.rho6());
    if r >= 3 {
        eq(rep, "E[ρ(l)ρ(j)ρ(s)] = 0", r, None, law.monomial(&[1, 1, 1]), zero.clone());
        eq(
            rep,
            "E[ρ(l)^2ρ(j)ρ(s)] = -(r-3)(r+1)(5r+7)/720",
            r,
            None,
            law.monomial(&[2, 1, 1]),
            cf.rho2_rho_rho(),
        );
    }
    if r >= 4 {
        let m = law.monomial(&[1, 1, 1, 1]);
        eq(rep, "|E[ρ(l)ρ(j)ρ(s)ρ(t)]| = (r+1)(5r+7)/240", r, None, abs(&m), cf.rho_rho_rho_rho_abs());
        let sign = if m > zero { "positive" } else if m < zero { "negative" } else { "zero" };
        rep.note("sign of E[ρ(l)ρ(j)ρ(s)ρ(t)]", r, None, &m, sign);
    }

    // Moments of β_k = Σ_l ρ_m(l)ρ_k(l) for independent rows m ≠ k.
    let rr = r as i128;
    let beta2: Rational = (0..r)
        .flat_map(|l| (0..r).map(move |j| (l, j)))
        .map(|(l, j)| pow(&law.product_moment(&[l, j]), 2))
        .fold(int(0), |a, x| a + x);
    eq(rep, "E[β_k^2] = r^2(r+1)^2(r-1)/144", r, None, beta2, rat(rr * rr * (rr + 1) * (rr + 1) * (rr - 1), 144));
    let beta4 = beta4_direct(law);
    let mut decomposed = int(rr) * pow(&cf.rho4(), 2)
        + int(rr * (rr - 1)) * (int(3) * pow(&cf.rho2_rho2(), 2) + int(4) * pow(&cf.rho3_rho(), 2));
    if r >= 3 {
        decomposed += int(6 * rr * (rr - 1) * (rr - 2)) * pow(&cf.rho2_rho_rho(), 2);
    }
    if r >= 4 {
        decomposed += int(rr * (rr - 1) * (rr - 2) * (rr - 3)) * pow(&cf.rho_rho_rho_rho_abs(), 2);
    }
    eq(rep, "E[β_k^4] four-index expansion", r, None, beta4.clone(), decomposed);
    le(rep, "E[β_k^4] <= 79r^10/345600", r, None, beta4, rat(79 * rr.pow(10), 345_600));
}

/// `E[β_k⁴] = Σ_{l,j,s,t} (E[ρ(l)ρ(j)ρ(s)ρ(t)])²`, summed over all `r⁴` index tuples.
fn beta4_direct(law: &SingleTrialLaw) -> Rational {
    let r = law.r();
    let mut cache = std::collections::HashMap::new();
    let mut total = int(0);
    for code in 0..r.pow(4) {
        let idx = [code / (r * r * r), (code / (r * r)) % r, (code / r) % r, code % r];
        let mut mult: Vec<u32> = Vec::new();
        let mut seen: Vec<usize> = Vec::new();
        for &i in &idx {
            match seen.iter().position(|&s| s == i) {
                Some(p) => mult[p] += 1,
                None => {
                    seen.push(i);
                    mult.push(1);
                }
            }
        }
        mult.sort_unstable_by(|a, b| b.cmp(a));
        let m = cache.entry(mult.clone()).or_insert_with(|| pow(&law.monomial(&mult), 2));
        total += &*m;
    }
    total
}

fn joint_formulas(rep: &mut Report, r: usize, n: usize) -> Result<()> {
    let m = exact_joint_moments(r, n)?;
    let (ri, ni) = (r as i128, n as i128);
    let nn = Some(n);
    let sigma = crate::ranks::theoretical_covariance(r)?;
    eq(rep, "E[S_j^2] = σ_jj = (r-1)/r", r, nn, m.s2.clone(), rat(ri - 1, ri));
    eq(rep, "E[S_jS_k] = σ_jk = -1/r", r, nn, m.s1s2.clone(), rat(-1, ri));
    rep.push(
        "theoretical_covariance matches enumeration",
        r,
        nn,
        (sigma.get(0, 0) - to_f64(&m.s2)).abs() < 1e-15 && (sigma.get(0, 1) - to_f64(&m.s1s2)).abs() < 1e-15,
        format!("({}, {})", sigma.get(0, 0), sigma.get(0, 1)),
        format!("({}, {})", m.s2, m.s1s2),
    );
    let s4 = rat(3 * (ri - 1) * ((5 * ni - 2) * ri * ri - 5 * ni - 2), 5 * ni * ri * ri * (ri + 1));
    eq(rep, "E[S_j^4] = 3(r-1)((5n-2)r^2-5n-2)/(5nr^2(r+1))", r, nn, m.s4.clone(), s4);
    le(rep, "E[S_j^4] <= 3 - 6/(5n)", r, nn, m.s4.clone(), int(3) - rat(6, 5 * ni));
    let r2m1 = ri * ri - 1;
    let s6 = rat(
        3 * (ri - 1) * (35 * ni * ni * r2m1 * r2m1 - 42 * ni * (ri.pow(4) - 1) + 16 * (ri.pow(4) + ri * ri + 1)),
        7 * ri.pow(3) * (ri + 1).pow(2) * ni * ni,
    );
    eq(rep, "E[S_j^6] closed form", r, nn, m.s6.clone(), s6);
    le(rep, "E[S_j^6] <= 15", r, nn, m.s6.clone(), int(15));
    let s2s2 = rat(
        5 * ni * (ri.pow(3) - ri * ri + ri + 3) - 4 * ri * ri - 10 * ri + 6,
        5 * ni * ri * ri * (ri + 1),
    );
    eq(rep, "E[S_j^2S_k^2] closed form", r, nn, m.s2s2.clone(), s2s2);
    eq(rep, "E[F_r] = r-1", r, nn, m.f.clone(), int(ri - 1));
    eq(rep, "E[F_r^2] = r^2-1-2(r-1)/n", r, nn, m.f2.clone(), int(r2m1) - rat(2 * (ri - 1), ni));
    eq(rep, "Var(F_r) = 2(r-1)(1-1/n)", r, nn, m.var_f.clone(), rat(2 * (ri - 1) * (ni - 1), ni));

    let a2 = rat((ri - 1).pow(2) * ri * (ri + 1), 12 * ni);
    eq(rep, "E[T_m]^2 = (r-1)^2 r(r+1)/(12n)", r, nn, m.t_mean_sq.clone(), a2.clone());
    eq(rep, "E[T_m^2] = r(r^2-1)/12 (1+(r-2)/n)", r, nn, m.t2.clone(), rat(ri * r2m1 * (ni + ri - 2), 12 * ni));

    let law = SingleTrialLaw::enumerate(r)?;
    let beta2 = rat(ri * ri * (ri + 1) * (ri + 1) * (ri - 1), 144);
    let beta4 = beta4_direct(&law);
    let b2 = rat(12, ri * (ri + 1) * ni);
    let (n1, n2) = (int(ni - 1), int(ni - 2));
    let t4 = &a2 * &a2
        + int(6) * prod(&[&a2, &b2, &n1, &beta2])
        + &b2 * &b2 * (&n1 * &beta4 + int(3) * prod(&[&n1, &n2, &beta2, &beta2]));
    eq(rep, "E[T_m^4] expansion in E[β^2], E[β^4]", r, nn, m.t4.clone(), t4);
    let t4_display = &a2 * &a2
        + int(6) * prod(&[&a2, &b2, &n1, &beta2])
        + int(6) * &b2 * &b2 * (&n1 * &beta4 + int(3) * prod(&[&n1, &n2, &beta2, &beta2]));
    rep.note("E[T_m^4] with coefficient 6 on the b^4 term (upper bound)", r, nn, &m.t4, &t4_display);
    if n >= 2 {
        le(rep, "E[T_m^2] <= r^3/12 (1+r/n)", r, nn, m.t2.clone(), rat(ri.pow(3) * (ni + ri), 12 * ni));
        let c_t = rat(7, 48) + rat(ri * ri, 36 * ni * ni) + rat(1, 5 * ni);
        le(rep, "E[T_m^4] <= C_T r^6", r, nn, m.t4.clone(), c_t * int(ri.pow(6)));
    }
    Ok(())
}

/// Checks every closed-form moment identity for `r ≤ r_max` (single trial, `r ≤ 10`) and, for
/// `r ≤ min(r_max, 6)` and `n ≤ n_max` within the enumeration budget, the joint identities.
pub fn verify_lemma_formulas(r_max: usize, n_max: usize) -> Result<Report> {
    let mut rep = Report::new();
    for r in 2..=r_max.min(10) {
        single_trial_formulas(&mut rep, &SingleTrialLaw::enumerate(r)?);
    }
    for r in 2..=r_max.min(10) {
        for n in 1..=n_max {
            if check_budget(configuration_count(r, n)).is_err() {
                break;
            }
            joint_formulas(&mut rep, r, n)?;
        }
    }
    Ok(rep)
}

fn g34(r: &Rational, x: &Rational) -> Rational {
    (r * r - int(1)) / int(4) * x + x * x * x
}

fn q12(r: &Rational, x: &Rational) -> Rational {
    r * r - int(1) - int(12) * x * x
}

/// Checks the moment inequalities at every `r` in `2..=r_max` (at most 10), with exact left sides.
pub fn verify_inequalities(r_max: usize) -> Result<Report> {
    if r_max > 10 {
        return Err(domain("verify_inequalities needs r_max <= 10"));
    }
    let mut rep = Report::new();
    for r in 2..=r_max {
        let law = SingleTrialLaw::enumerate(r)?;
        let ri = r as i128;
        let rq = int(ri);
        let cf = ClosedForms::new(r);
        let rp = |k: u32| pow(&rq, k);

        le(&mut rep, "E[ρ(l)^4] <= r^4/80", r, None, law.monomial(&[4]), rp(4) / int(80));
        le(&mut rep, "|E[ρ(l)^3ρ(j)]| <= r^3/80", r, None, abs(&law.monomial(&[3, 1])), rp(3) / int(80));
        le(&mut rep, "E[ρ(l)^2ρ(j)^2] <= r^4/144", r, None, law.monomial(&[2, 2]), rp(4) / int(144));
        if r >= 3 {
            le(&mut rep, "|E[ρ(l)^2ρ(j)ρ(s)]| <= r^3/144", r, None, abs(&law.monomial(&[2, 1, 1])), rp(3) / int(144));
        }

        // Auxiliary ρ-moment caps.
        for (k, den) in [(6u32, 448i128), (8, 2304), (12, 53_248), (16, 1_114_112)] {
            le(&mut rep, &format!("E[ρ^{k}] <= r^{k}/{den}"), r, None, law.monomial(&[k]), rp(k) / int(den));
        }

        let h = law.expect(1, |x| pow(&g34(&rq, &x[0]), 2) * &x[0] * &x[0]);
        let closed = rat((ri * ri - 1) * (47 * ri.pow(6) - 322 * ri.pow(4) + 875 * ri * ri - 936), 20_160);
        eq(&mut rep, "E[((r^2-1)/4 ρ+ρ^3)^2ρ^2] closed form", r, None, h.clone(), closed);
        le(&mut rep, "E[((r^2-1)/4 ρ+ρ^3)^2ρ^2] <= 0.00234r^8", r, None, h, rat(234, 100_000) * rp(8));
        let g4 = law.expect(1, |x| pow(&g34(&rq, &x[0]), 4));
        le(&mut rep, "E[((r^2-1)/4 ρ+ρ^3)^4] <= 1763r^12/3843840", r, None, g4, rat(1763, 3_843_840) * rp(12));
        let h2 = law.expect(2, |x| pow(&g34(&rq, &x[0]), 2) * &x[1] * &x[1]);
        le(&mut rep, "E[((r^2-1)/4 ρ(j)+ρ(j)^3)^2ρ(k)^2] <= 0.00240r^8", r, None, h2, rat(240, 100_000) * rp(8));

        // Power sums over the whole support of one row.
        let support: Vec<Rational> = (0..r).map(|i| law.value(i)).collect();
        let c4 = rat(ri * (3 * ri.pow(4) - 10 * ri * ri + 7), 240);
        let c6 = rat(ri * (3 * ri.pow(6) - 21 * ri.pow(4) + 49 * ri * ri - 31), 1344);
        let mut ok4 = true;
        let mut ok6 = true;
        let mut ok3 = true;
        for x in &support {
            let s = |k: u32| support.iter().fold(int(0), |a, v| a + pow(&(x - v), k));
            let x2 = x * x;
            let x4 = &x2 * &x2;
            let f4 = &c4 + rat(ri * (ri * ri - 1), 2) * &x2 + &rq * &x4;
            let f6 = &c6 + rat(ri * (3 * ri.pow(4) - 10 * ri * ri + 7), 16) * &x2
                + rat(5 * ri * (ri * ri - 1), 4) * &x4
                + &rq * &x4 * &x2;
            let f3 = -(rat(ri * (ri * ri - 1), 4) * x + &rq * &x2 * x);
            ok4 &= s(4) == f4;
            ok6 &= s(6) == f6;
            ok3 &= support.iter().fold(int(0), |a, v| a + pow(&(v - x), 3)) == f3;
        }
        rep.push("Σ_l(ρ(k)-ρ(l))^4 polynomial identity", r, None, ok4, "all support points", "closed form");
        rep.push("Σ_l(ρ(k)-ρ(l))^6 polynomial identity", r, None, ok6, "all support points", "closed form");
        rep.push("Σ_l(ρ(l)-ρ(j))^3 polynomial identity", r, None, ok3, "all support points", "closed form");

        // Sums with S-moment caps E[S²] ≤ 1, E[S⁴] ≤ 3, E[S⁶] ≤ 15 and exact ρ-moments.
        let rf = r as f64;
        let m = |k: u32| to_f64(&law.monomial(&[k]));
        let (c4f, c6f) = (to_f64(&c4), to_f64(&c6));
        let sum1 = c4f + rf * (rf * rf - 1.0) / 2.0 * (3.0 * m(4)).sqrt() + rf * (3.0 * m(8)).sqrt();
        le_f64(&mut rep, "Σ_l E[S_k^2(ρ(l)-ρ(k))^4] <= 0.1455r^5", r, None, sum1, 0.1455 * rf.powi(5));
        let s6c = 15f64.powf(2.0 / 3.0);
        let sum2 = 3.0 * c4f + rf * (rf * rf - 1.0) / 2.0 * s6c * m(6).cbrt() + rf * s6c * m(12).cbrt();
        le_f64(&mut rep, "Σ_l E[S_k^4(ρ(l)-ρ(k))^4] <= 0.6717r^5", r, None, sum2, 0.6717 * rf.powi(5));
        let sum3 = c6f
            + rf * (3.0 * rf.powi(4) - 10.0 * rf * rf + 7.0) / 16.0 * (3.0 * m(4)).sqrt()
            + 5.0 * rf * (rf * rf - 1.0) / 4.0 * (3.0 * m(8)).sqrt()
            + rf * (3.0 * m(12)).sqrt();
        le_f64(&mut rep, "Σ_l E[S_k^2(ρ(l)-ρ(k))^6] <= 0.09116r^7", r, None, sum3, 0.09116 * rf.powi(7));

        let v37 = law.expect(1, |x| pow(&q12(&rq, &x[0]), 2) * pow(&x[0], 4));
        let closed = rat((ri * ri - 1) * (ri * ri - 4) * (9 * ri.pow(4) - 118 * ri * ri + 445), 420);
        eq(&mut rep, "E[((r^2-1)-12ρ^2)^2ρ^4] closed form", r, None, v37.clone(), closed);
        le(&mut rep, "E[((r^2-1)-12ρ^2)^2ρ^4] <= 3r^8/140", r, None, v37, rat(3, 140) * rp(8));
        let q4 = law.expect(1, |x| pow(&q12(&rq, &x[0]), 4));
        let closed = rat(48 * (ri * ri - 1) * (ri * ri - 4) * (ri.pow(4) - 17 * ri * ri + 100), 35);
        eq(&mut rep, "E[((r^2-1)-12ρ^2)^4] closed form", r, None, q4.clone(), closed);
        le(&mut rep, "E[((r^2-1)-12ρ^2)^4] <= 48r^8/35", r, None, q4, rat(48, 35) * rp(8));

        let patterns2: &[[usize; 2]] = &[[0, 0], [0, 1]];
        for p in patterns2 {
            let v = law.expect_indices(p, |x| pow(&q12(&rq, &x[0]), 2) * pow(&x[1], 4));
            le(&mut rep, &format!("E[((r^2-1)-12ρ(j)^2)^2ρ(q)^4] {p:?} <= 0.02440r^8"), r, None, v, rat(2440, 100_000) * rp(8));
            let v = law.expect_indices(&[p[0], p[0], p[1]], |x| pow(&q12(&rq, &x[0]), 2) * &x[1] * &x[1] * &x[2] * &x[2]);
            le(&mut rep, &format!("E[((r^2-1)-12ρ(j)^2)^2ρ(j)^2ρ(q)^2] {p:?} <= 0.02292r^8"), r, None, v, rat(2292, 100_000) * rp(8));
        }
        let patterns3: &[[usize; 3]] = &[[0, 0, 0], [0, 0, 1], [0, 1, 0], [0, 1, 1], [0, 1, 2]];
        for p in patterns3 {
            if p.iter().max().unwrap() + 1 > law.positions() {
                continue;
            }
            let v = law.expect_indices(p, |x| pow(&q12(&rq, &x[0]), 2) * pow(&x[1], 4) * pow(&x[2], 4));
            le(&mut rep, &format!("E[((r^2-1)-12ρ(j)^2)^2ρ(q)^4ρ(t)^4] {p:?} <= 0.00111r^12"), r, None, v, rat(111, 100_000) * rp(12));
        }

        let d2 = law.expect(2, |x| pow(&(&x[0] - &x[1]), 2));
        eq(&mut rep, "E[(ρ(k)-ρ(l))^2] = r(r+1)/6", r, None, d2, rat(ri * (ri + 1), 6));
        let d4 = law.expect(2, |x| pow(&(&x[0] - &x[1]), 4));
        eq(&mut rep, "E[(ρ(k)-ρ(l))^4] = r(r+1)(2r^2-3)/30", r, None, d4, rat(ri * (ri + 1) * (2 * ri * ri - 3), 30));
        let scale = rat(6, ri * (ri + 1));
        let v38 = law.expect(2, |x| pow(&(&scale * pow(&(&x[0] - &x[1]), 2) - int(1)), 2));
        eq(&mut rep, "E[(6/(r(r+1))(ρ(k)-ρ(l))^2-1)^2] = (r-2)(7r+9)/(5r(r+1))", r, None, v38.clone(), rat((ri - 2) * (7 * ri + 9), 5 * ri * (ri + 1)));
        le(&mut rep, "E[(6/(r(r+1))(ρ(k)-ρ(l))^2-1)^2] <= 7/5", r, None, v38, rat(7, 5));
        le(&mut rep, "E[(6/(r(r+1))(ρ(k)-ρ(k))^2-1)^2] <= 7/5", r, None, int(1), rat(7, 5));
        let _ = cf;
    }
    Ok(rep)
}

/// The A.2 index-sum decompositions on seeded random symmetric integer functions, the counting
/// case `f ≡ 1`, and the squared single-trial product moments `f = E[ρ(l)ρ(j)ρ(s)ρ(t)]²`.
pub fn verify_index_decomposition(r: usize, trials: usize, seed: u64) -> Result<Report> {
    if !(2..=8).contains(&r) {
        return Err(domain(format!("index decomposition needs 2 <= r <= 8, got {r}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = Report::new();
    for _ in 0..trials {
        let f4 = symmetric_random(&mut rng, r, 4);
        check_four(&mut rep, r, "random symmetric f", |i| f4[i].clone());
        let f3 = symmetric_random(&mut rng, r, 3);
        let lhs3: Rational = f3.iter().fold(int(0), |a, x| a + x);
        let at3 = |l: usize, j: usize, s: usize| f3[(l * r + j) * r + s].clone();
        let mut rhs3 = int(0);
        for l in 0..r {
            rhs3 += at3(l, l, l);
            for j in (0..r).filter(|&j| j != l) {
                rhs3 += int(3) * at3(l, j, j);
                for s in (0..r).filter(|&s| s != l && s != j) {
                    rhs3 += at3(l, j, s);
                }
            }
        }
        eq(&mut rep, "three-index decomposition, random symmetric f", r, None, lhs3, rhs3);
        let f2 = symmetric_random(&mut rng, r, 2);
        let lhs2: Rational = f2.iter().fold(int(0), |a, x| a + x);
        let rhs2 = (0..r).fold(int(0), |a, l| a + &f2[l * r + l])
            + (0..r)
                .flat_map(|l| (0..r).filter(move |&j| j != l).map(move |j| (l, j)))
                .fold(int(0), |a, (l, j)| a + &f2[l * r + j]);
        eq(&mut rep, "two-index decomposition, random symmetric f", r, None, lhs2, rhs2);
    }
    check_four(&mut rep, r, "f = 1 (counting)", |_| int(1));
    let law = SingleTrialLaw::enumerate(r)?;
    let moments: Vec<Rational> = (0..r.pow(4))
        .map(|code| {
            let idx = [code / (r * r * r), (code / (r * r)) % r, (code / r) % r, code % r];
            pow(&law.product_moment(&idx), 2)
        })
        .collect();
    check_four(&mut rep, r, "f = E[ρ(l)ρ(j)ρ(s)ρ(t)]^2", |i| moments[i].clone());
    Ok(rep)
}

fn symmetric_random(rng: &mut ChaCha8Rng, r: usize, arity: u32) -> Vec<Rational> {
    let size = r.pow(arity);
    let raw: Vec<i64> = (0..size).map(|_| rng.random_range(-50..=50)).collect();
    let digits = |code: usize| -> Vec<usize> {
        let mut d = vec![0; arity as usize];
        let mut c = code;
        for slot in d.iter_mut().rev() {
            *slot = c % r;
            c /= r;
        }
        d
    };
    let encode = |d: &[usize]| d.iter().fold(0, |acc, &x| acc * r + x);
    let mut order: Vec<usize> = (0..arity as usize).collect();
    let mut orders = Vec::new();
    loop {
        orders.push(order.clone());
        if !super::enumerate::next_permutation(&mut order) {
            break;
        }
    }
    (0..size)
        .map(|code| {
            let d = digits(code);
            let total: i64 = orders
                .iter()
                .map(|o| raw[encode(&o.iter().map(|&p| d[p]).collect::<Vec<_>>())])
                .sum();
            int(total as i128)
        })
        .collect()
}

fn check_four<F: Fn(usize) -> Rational>(rep: &mut Report, r: usize, label: &str, f: F) {
    let at = |l: usize, j: usize, s: usize, t: usize| f(((l * r + j) * r + s) * r + t);
    let lhs = (0..r.pow(4)).fold(int(0), |a, i| a + f(i));
    let mut rhs = int(0);
    for l in 0..r {
        rhs += at(l, l, l, l);
        for j in (0..r).filter(|&j| j != l) {
            rhs += int(4) * at(l, j, j, j) + int(3) * at(l, l, j, j);
            for s in (0..r).filter(|&s| s != l && s != j) {
                rhs += int(6) * at(l, j, s, s);
                for t in (0..r).filter(|&t| t != l && t != j && t != s) {
                    rhs += at(l, j, s, t);
                }
            }
        }
    }
    eq(rep, &format!("four-index decomposition, {label}"), r, None, lhs, rhs);
}

/// For `r = 2`, `n = 2k`: `P(F_2 = 0) = C(2k,k)/4^k` exactly, and the Kolmogorov distance to
/// χ²_(1) is at least that atom.
pub fn verify_remark13(k_max: usize) -> Result<Report> {
    let mut rep = Report::new();
    for k in 1..=k_max {
        let n = 2 * k;
        if check_budget(configuration_count(2, n)).is_err() {
            break;
        }
        let law = exact_law(2, n)?;
        let p0 = law.prob_zero();
        eq(&mut rep, "P(F_2 = 0) = C(2k,k)/4^k", 2, Some(n), p0.clone(), central_binomial_probability(k));
        let d = law.kolmogorov_to_chisq()?;
        le_f64(&mut rep, "P(F_2 = 0) <= d_K(F_2, chi2_1)", 2, Some(n), to_f64(&p0), d + 1e-15);
        rep.note("Stirling: P(F_2 = 0) vs sqrt(2/(πn))", 2, Some(n), to_f64(&p0), (2.0 / (std::f64::consts::PI * n as f64)).sqrt());
    }
    Ok(rep)
}
