//! Shared test oracles.
#![allow(dead_code)]

use nsbtune::constraints::*;
use nsbtune::evaluator::UfpMap;
use nsbtune::frontend::*;
use nsbtune::numerics::NumericConfig;
use rand::Rng;

/// Random system with unit positive rhs coefficients over `n` nsb variables in `[0, cap]`.
pub fn random_monotone(rng: &mut impl Rng, n: usize, cap: i64) -> ConstraintSystem {
    let mut s = ConstraintSystem::new(SystemKind::Ilp);
    for i in 0..n {
        s.var(IntVar::Nsb(ControlPoint(i as u32)), Some(cap));
    }
    let m = rng.gen_range(n..=3 * n);
    for _ in 0..m {
        let lhs = rng.gen_range(0..n);
        let k = rng.gen_range(0..=2usize);
        let terms = (0..k).map(|_| (1, rng.gen_range(0..n))).collect();
        let constant = if k == 0 { rng.gen_range(0..=cap / 2) } else { rng.gen_range(-8..=3) };
        s.push(lhs, terms, vec![constant], Origin::Seed);
    }
    s
}

/// Random system with coefficients in {±1, ±2}; the last `free` variables are error widths
/// (outside the objective).
pub fn random_mixed(rng: &mut impl Rng, n: usize, free: usize, cap: i64) -> ConstraintSystem {
    let mut s = ConstraintSystem::new(SystemKind::Refined);
    for i in 0..n {
        let v = if i + free < n {
            IntVar::Nsb(ControlPoint(i as u32))
        } else {
            IntVar::Nsbe(ControlPoint(i as u32))
        };
        s.var(v, Some(cap));
    }
    let m = rng.gen_range(n..=2 * n + 2);
    for _ in 0..m {
        let lhs = rng.gen_range(0..n);
        let k = rng.gen_range(0..=3usize);
        let terms = (0..k)
            .map(|_| ([-2, -1, 1, 1, 2][rng.gen_range(0..5)], rng.gen_range(0..n)))
            .collect();
        s.push(lhs, terms, vec![rng.gen_range(-12..=12)], Origin::Seed);
    }
    s
}

/// Complete search over the integer box with interval propagation and cost pruning.
/// Returns the minimal Σ nsb, or `None` if no point of the box is feasible.
pub fn brute_force_min(s: &ConstraintSystem) -> Option<i64> {
    let n = s.num_vars();
    let lo = vec![0i64; n];
    let hi: Vec<i64> = s.upper.iter().map(|u| u.expect("boxed system")).collect();
    let obj: Vec<i64> = s.vars.iter().map(|v| (v.kind() == VarKind::Nsb) as i64).collect();
    let mut best = None;
    search(s, &obj, lo, hi, &mut best);
    best
}

/// Tightens bounds to a fixed point; false if some domain becomes empty.
fn propagate(s: &ConstraintSystem, lo: &mut [i64], hi: &mut [i64]) -> bool {
    loop {
        let mut changed = false;
        for c in &s.constraints {
            // x_l − Σ c_j x_j ≥ k, written as Σ a_j x_j ≥ k
            let mut a: Vec<(i64, usize)> = vec![(1, c.lhs)];
            for &(cj, j) in &c.rhs.terms {
                a.push((-cj, j));
            }
            let k = c.rhs.constant();
            let max_of = |t: &(i64, usize), lo: &[i64], hi: &[i64]| if t.0 > 0 { t.0 * hi[t.1] } else { t.0 * lo[t.1] };
            let total_max: i64 = a.iter().map(|t| max_of(t, lo, hi)).sum();
            if total_max < k {
                return false;
            }
            for t in &a {
                // t alone must make up what the others cannot
                let rest = total_max - max_of(t, lo, hi);
                let need = k - rest;
                let (coef, j) = *t;
                if coef > 0 {
                    let b = div_ceil(need, coef);
                    if b > lo[j] {
                        lo[j] = b;
                        changed = true;
                    }
                } else {
                    let b = div_floor(need, coef);
                    if b < hi[j] {
                        hi[j] = b;
                        changed = true;
                    }
                }
                if lo[j] > hi[j] {
                    return false;
                }
            }
        }
        if !changed {
            return true;
        }
    }
}

fn div_floor(a: i64, b: i64) -> i64 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn div_ceil(a: i64, b: i64) -> i64 {
    -div_floor(-a, b)
}

fn search(s: &ConstraintSystem, obj: &[i64], mut lo: Vec<i64>, mut hi: Vec<i64>, best: &mut Option<i64>) {
    if !propagate(s, &mut lo, &mut hi) {
        return;
    }
    let bound: i64 = obj.iter().zip(&lo).map(|(c, l)| c * l).sum();
    if best.is_some_and(|b| bound >= b) {
        return;
    }
    let Some(j) = (0..lo.len()).find(|&j| lo[j] < hi[j]) else {
        // every domain is a single point that survived propagation of every row
        debug_assert!(s.constraints.iter().all(|c| c.holds(&lo)));
        *best = Some(bound);
        return;
    };
    for v in lo[j]..=hi[j] {
        let (mut l, mut h) = (lo.clone(), hi.clone());
        l[j] = v;
        h[j] = v;
        search(s, obj, l, h, best);
    }
}

pub struct Distance {
    pub p: LabeledProgram,
    pub u: UfpMap,
    pub sqrt: ControlPoint,
    pub outer: ControlPoint,
    pub inner: ControlPoint,
    pub muls: [ControlPoint; 3],
    pub dx_reads: [ControlPoint; 2],
}

pub fn find(p: &LabeledProgram, k: PointKind) -> Vec<ControlPoint> {
    (0..p.num_points())
        .filter(|&i| p.points[i] == k)
        .map(|i| ControlPoint(i as u32))
        .collect()
}

/// `distance = sqrt(dx*dx + dy*dy + dz*dz)` with the reference magnitudes. The reads of dy and
/// dz need ufps as well: dy = 3 (so dy² = 6 carries no extra bit) and dz = -2 (dz² = -3).
pub fn distance() -> Distance {
    let opts = ParseOptions {
        inputs: vec!["dx".into(), "dy".into(), "dz".into()],
        ..Default::default()
    };
    let p = parse_with("distance = sqrt(dx * dx + dy * dy + dz * dz);", &opts).unwrap();
    let muls: [ControlPoint; 3] = find(&p, PointKind::Binary(BinOp::Mul)).try_into().unwrap();
    let adds = find(&p, PointKind::Binary(BinOp::Add));
    let (outer, inner) = (adds[0], adds[1]);
    let sqrt = find(&p, PointKind::Sqrt)[0];
    let mut ufps = vec![(muls[0], 7), (muls[1], 6), (muls[2], -3), (inner, 7), (outer, 7), (sqrt, 3)];
    for (name, u) in [("dx", 3), ("dy", 3), ("dz", -2)] {
        let v = p.var_id(name).unwrap();
        ufps.extend(find(&p, PointKind::Read(v)).into_iter().map(|c| (c, u)));
        ufps.extend(find(&p, PointKind::Input(v)).into_iter().map(|c| (c, u)));
    }
    let d = p.var_id("distance").unwrap();
    ufps.push((find(&p, PointKind::Def(d))[0], 3));
    let dx = p.var_id("dx").unwrap();
    let dx_reads: [ControlPoint; 2] = find(&p, PointKind::Read(dx)).try_into().unwrap();
    let u = UfpMap::from_ufps(p.num_points(), ufps, NumericConfig::default());
    Distance {
        p,
        u,
        sqrt,
        outer,
        inner,
        muls,
        dx_reads,
    }
}

/// Exact value of a multi-precision number.
pub fn exact(x: &nsbtune::numerics::MpFloat) -> num_rational::BigRational {
    use num_bigint::{BigInt, Sign};
    let (neg, mant, exp) = x.raw_parts();
    let m = BigInt::from_biguint(if neg { Sign::Minus } else { Sign::Plus }, mant.clone());
    pow2_times(m, exp)
}

fn pow2_times(m: num_bigint::BigInt, e: i64) -> num_rational::BigRational {
    use num_bigint::BigInt;
    use num_rational::BigRational;
    if e >= 0 {
        BigRational::from_integer(m << e as usize)
    } else {
        BigRational::new(m, BigInt::from(1) << (-e) as usize)
    }
}

/// `q` rounded to `p` significant bits, to nearest with ties to even.
pub fn round_exact(q: &num_rational::BigRational, p: u32) -> num_rational::BigRational {
    use num_bigint::BigInt;
    use num_integer::Integer;
    use num_traits::{Signed, Zero};
    if q.is_zero() {
        return q.clone();
    }
    let a = q.abs();
    let (num, den) = (a.numer().clone(), a.denom().clone());
    // k with 2^(p-1) <= a * 2^k < 2^p
    let mut k = p as i64 - 1 - (num.bits() as i64 - den.bits() as i64);
    let scaled = |k: i64| -> (BigInt, BigInt) {
        if k >= 0 {
            (&num << k as usize, den.clone())
        } else {
            (num.clone(), &den << (-k) as usize)
        }
    };
    let lo = BigInt::from(1) << (p - 1) as usize;
    loop {
        let (n, d) = scaled(k);
        let fl = n.div_floor(&d);
        if fl < lo {
            k += 1;
        } else if fl >= (&lo << 1usize) {
            k -= 1;
        } else {
            break;
        }
    }
    let (n, d) = scaled(k);
    let (mut fl, r) = n.div_rem(&d);
    let twice: BigInt = r << 1usize;
    if twice > d || (twice == d && fl.is_odd()) {
        fl += 1;
    }
    let v = pow2_times(fl, -k);
    if q.is_negative() {
        -v
    } else {
        v
    }
}

/// `sqrt(x)` rounded to `p` bits from an integer square root with a sticky remainder.
pub fn round_sqrt(x: &nsbtune::numerics::MpFloat, p: u32) -> num_rational::BigRational {
    use num_bigint::{BigInt, BigUint};
    let (neg, mant, mut e) = x.raw_parts();
    assert!(!neg);
    let mut m: BigUint = mant.clone();
    if e % 2 != 0 {
        m <<= 1usize;
        e -= 1;
    }
    let t = ((2 * p as i64 + 6 - m.bits() as i64).max(0) + 1) / 2;
    let n = &m << (2 * t) as usize;
    let s = n.sqrt();
    let inexact = &s * &s != n;
    let d = s.bits() - p as u64;
    let q = &s >> d as usize;
    let r = &s - (&q << d as usize);
    let half = BigUint::from(1u32) << (d - 1) as usize;
    let up = r > half || (r == half && (inexact || q.bit(0)));
    let q = if up { q + 1u32 } else { q };
    pow2_times(BigInt::from(q), d as i64 + (e - 2 * t) / 2)
}

/// Random value with up to `bits` significand bits and exponent in `±exp`.
pub fn random_mp(rng: &mut impl Rng, bits: u64, exp: i64) -> nsbtune::numerics::MpFloat {
    let n = rng.gen_range(1..=bits);
    let words: Vec<u32> = (0..n.div_ceil(32)).map(|_| rng.gen()).collect();
    let mant = (num_bigint::BigUint::from_slice(&words) >> (32 * words.len() as u64 - n) as usize) | num_bigint::BigUint::from(1u32);
    nsbtune::numerics::MpFloat::from_parts(rng.gen(), mant, rng.gen_range(-exp..=exp), 1000)
}

/// Randomized ufp, rounding-bound, idempotence and correct-rounding checks; one sample runs
/// all four. Returns the failures.
pub fn rounding_suite(samples: usize, seed: u64) -> Vec<String> {
    use nsbtune::numerics::{arith, ArithOp};
    use num_rational::BigRational;
    use num_traits::{One, Signed};
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let two = BigRational::from_integer(2.into());
    let pow2 = |e: i64| if e >= 0 { two.pow(e as i32) } else { BigRational::one() / two.pow((-e) as i32) };
    let mut failures = Vec::new();
    for i in 0..samples {
        let x = random_mp(&mut rng, 300, 400);
        let y = random_mp(&mut rng, 300, 400);
        let p = rng.gen_range(1..=200u32);
        let ex = exact(&x);
        let u = x.ufp().unwrap();
        if !(pow2(u) <= ex.abs() && ex.abs() < pow2(u + 1)) {
            failures.push(format!("#{i} ufp law: {x:?} has ufp {u}"));
        }
        let r = x.round_to(p);
        if (exact(&r) - &ex).abs() > pow2(u - p as i64) {
            failures.push(format!("#{i} rounding bound: {x:?} at {p}"));
        }
        if exact(&r.round_to(p)) != exact(&r) {
            failures.push(format!("#{i} idempotence: {x:?} at {p}"));
        }
        let op = [ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div, ArithOp::Sqrt][i % 5];
        let ey = exact(&y);
        let (got, want) = match op {
            ArithOp::Add => (arith(op, &[&x, &y], p).unwrap(), round_exact(&(&ex + &ey), p)),
            ArithOp::Sub => (arith(op, &[&x, &y], p).unwrap(), round_exact(&(&ex - &ey), p)),
            ArithOp::Mul => (arith(op, &[&x, &y], p).unwrap(), round_exact(&(&ex * &ey), p)),
            ArithOp::Div => (arith(op, &[&x, &y], p).unwrap(), round_exact(&(&ex / &ey), p)),
            ArithOp::Sqrt => {
                let a = x.abs();
                (arith(op, &[&a], p).unwrap(), round_sqrt(&a, p))
            }
        };
        if exact(&got) != want {
            failures.push(format!("#{i} correct rounding: {op:?} {x:?} {y:?} at {p} gave {got:?}"));
        }
    }
    failures
}

pub fn system(d: &Distance, refined: bool) -> ConstraintSystem {
    let links = compute_def_use(&d.p);
    let cfg = GenConfig::default();
    if refined {
        gen_refined(&d.p, &d.u, &links, &cfg).unwrap()
    } else {
        gen_ilp(&d.p, &d.u, &links, &cfg).unwrap()
    }
}

pub fn var(s: &ConstraintSystem, v: IntVar) -> usize {
    s.lookup(v).unwrap_or_else(|| panic!("{v} not declared"))
}

pub fn xi_of(s: &ConstraintSystem, at: ControlPoint) -> usize {
    (0..s.num_vars())
        .find(|&i| matches!(s.vars[i], IntVar::Xi { at: a, .. } if a == at))
        .unwrap()
}

/// The single constraint with this lhs whose rhs mentions `rhs_var`.
pub fn constraint<'a>(s: &'a ConstraintSystem, lhs: usize, rhs_var: usize) -> &'a LinearConstraint {
    let v: Vec<_> = s
        .constraints
        .iter()
        .filter(|c| c.lhs == lhs && c.rhs.terms.iter().any(|t| t.1 == rhs_var))
        .collect();
    assert_eq!(v.len(), 1, "{}", s.dump());
    v[0]
}

pub fn operand(s: &ConstraintSystem, op: ControlPoint, r: ControlPoint) -> Vec<i64> {
    let c = constraint(s, var(s, IntVar::Nsb(op)), var(s, IntVar::Nsb(r)));
    assert!(c.rhs.terms.contains(&(1, xi_of(s, r))));
    c.rhs.pieces.clone()
}
