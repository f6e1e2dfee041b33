use nsbtune::evaluator::*;
use nsbtune::frontend::*;
use nsbtune::numerics::{cmp_values, MpFloat, NumericConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn closed() -> Vec<Bindings> {
    vec![Bindings::new()]
}

fn mp(s: &str) -> MpFloat {
    MpFloat::from_decimal(s, 500).unwrap()
}

fn point_of(p: &LabeledProgram, pred: impl Fn(PointKind) -> bool) -> ControlPoint {
    ControlPoint((0..p.num_points()).find(|&i| pred(p.points[i])).unwrap() as u32)
}

#[test]
fn doubling() {
    let p = parse("x = 1.0; y = x + x;").unwrap();
    let t = run_reference(&p, 500, &Bindings::new(), &EvalConfig::default()).unwrap();
    assert_eq!(cmp_values(&t.env["y"], &mp("2")), std::cmp::Ordering::Equal);
}

#[test]
fn quarter_steps() {
    let p = parse("t = 0.0; while (t < 1.0) { t = t + 0.25; }").unwrap();
    let t = run_reference(&p, 500, &Bindings::new(), &EvalConfig::default()).unwrap();
    assert_eq!(t.iterations, 4);
    assert_eq!(t.env["t"].to_f64(), 1.0);
}

#[test]
fn iteration_cap() {
    let p = parse("t = 0.0; while (t < 1.0) { t = t + 0.0; }").unwrap();
    let cfg = EvalConfig {
        iteration_cap: 1000,
        ..Default::default()
    };
    let e = run_reference(&p, 64, &Bindings::new(), &cfg).unwrap_err();
    assert_eq!(e.kind, EvalErrorKind::IterationCap(1000));
}

#[test]
fn numeric_errors_name_the_point() {
    let p = parse("a = 0.0; b = 1.0 / a;").unwrap();
    let e = run_reference(&p, 64, &Bindings::new(), &EvalConfig::default()).unwrap_err();
    assert_eq!(e.point, Some(point_of(&p, |k| k == PointKind::Binary(BinOp::Div))));
    let p = parse("a = -1.0; b = sqrt(a);").unwrap();
    let e = run_reference(&p, 64, &Bindings::new(), &EvalConfig::default()).unwrap_err();
    assert!(e.to_string().contains("square root"));
}

#[test]
fn product_range() {
    let p = parse("c = 2.0; x = c * c;").unwrap();
    let u = analyze_ranges(&p, 500, &closed(), &EvalConfig::default()).unwrap();
    let mul = point_of(&p, |k| k == PointKind::Binary(BinOp::Mul));
    assert_eq!(u.ufp(mul), Some(2));
    assert!(u.unvisited().is_empty());
}

#[test]
fn accumulator_range() {
    let p = parse("t = 0.0; while (t < 999.9) { t = t + 0.5; }").unwrap();
    let u = analyze_ranges(&p, 500, &closed(), &EvalConfig::default()).unwrap();
    let v = p.var_id("t").unwrap();
    let defs: Vec<_> = (0..p.num_points())
        .filter(|&i| p.points[i] == PointKind::Def(v))
        .collect();
    let body_def = ControlPoint(defs[1] as u32);
    assert_eq!(u.ufp(body_def), Some(9));
    assert_eq!(u.get(body_def).unwrap().visits, 2000);
    // the initial store only ever sees zero
    let init = ControlPoint(defs[0] as u32);
    assert_eq!(u.ufp(init), Some(-500));
    assert_eq!(u.zero_points(), vec![init, ControlPoint(1)]);
}

#[test]
fn untaken_branch_is_unvisited() {
    let p = parse("a = 1.0; if (a > 2.0) { b = a * 3.0; } else { b = a; }").unwrap();
    let u = analyze_ranges(&p, 500, &closed(), &EvalConfig::default()).unwrap();
    let mul = point_of(&p, |k| k == PointKind::Binary(BinOp::Mul));
    assert!(u.unvisited().contains(&mul));
}

#[test]
fn ranges_union_over_runs() {
    let opts = ParseOptions {
        inputs: vec!["x".into()],
        ..Default::default()
    };
    let p = parse_with("y = x * x;", &opts).unwrap();
    let runs: Vec<Bindings> = ["0.5", "-3.0"]
        .iter()
        .map(|v| [("x".to_string(), v.to_string())].into())
        .collect();
    let u = analyze_ranges(&p, 200, &runs, &EvalConfig::default()).unwrap();
    let mul = point_of(&p, |k| k == PointKind::Binary(BinOp::Mul));
    let e = u.get(mul).unwrap();
    assert_eq!(e.ufp, 3);
    assert_eq!(e.min_abs.to_f64(), 0.25);
    assert_eq!(e.visits, 2);
}

#[test]
fn native_range_analysis_matches_multiprecision() {
    let src = "a = 0.1; b = 3.0; t = 0.0;
        while (t < 50.0) { a = a * 1.1 + b / 7.0; b = sqrt(b + a); t = t + 1.0; }";
    let p = parse(src).unwrap();
    let cfg = EvalConfig::default();
    let mp_map = analyze_ranges(&p, 500, &closed(), &cfg).unwrap();
    let f_map = analyze_ranges_with::<f64>(&p, 53, &closed(), &cfg, NumericConfig::default()).unwrap();
    for i in 0..p.num_points() {
        let cp = ControlPoint(i as u32);
        assert_eq!(mp_map.ufp(cp), f_map.ufp(cp), "{cp}");
    }
}

#[test]
fn uniform_tuned_equals_reference() {
    let src = "a = 0.1; b = 3.0; t = 0.0;
        while (t < 20.0) { a = a * 1.1 - b / 7.0; b = sqrt(b * b + a * a); t = t + 1.0; }";
    let p = parse(src).unwrap();
    let cfg = EvalConfig::default();
    let r = run_reference(&p, 500, &Bindings::new(), &cfg).unwrap();
    let t = run_tuned(&p, &vec![500; p.num_points()], &Bindings::new(), &cfg).unwrap();
    assert_eq!(r.env, t.env);
    assert!(r.divergence(&t).is_empty());
}

#[test]
fn tuned_literals_are_rounded() {
    let p = parse("x = 0.1;").unwrap();
    let t = run_tuned(&p, &[24, 24], &Bindings::new(), &EvalConfig::default()).unwrap();
    assert_eq!(t.env["x"].to_f64(), 0.1f32 as f64);
    let e = run_tuned(&p, &[24], &Bindings::new(), &EvalConfig::default()).unwrap_err();
    assert!(matches!(e.kind, EvalErrorKind::WidthCount { .. }));
}

#[test]
fn tuned_control_flow_follows_tuned_values() {
    // at 4 bits 0.1 rounds to 0.1015625 so the loop runs fewer times
    let p = parse("t = 0.0; while (t < 1.0) { t = t + 0.1; }").unwrap();
    let cfg = EvalConfig::default();
    let r = run_reference(&p, 500, &Bindings::new(), &cfg).unwrap();
    let t = run_tuned(&p, &vec![4; p.num_points()], &Bindings::new(), &cfg).unwrap();
    assert_ne!(r.iterations, t.iterations);
    assert!(!r.divergence(&t).is_empty());
}

#[test]
fn single_addition_error_propagation() {
    let opts = ParseOptions {
        inputs: vec!["x".into(), "y".into()],
        ..Default::default()
    };
    let p = parse_with("z = x + y;", &opts).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..500 {
        let x: f64 = rng.gen_range(-1e3..1e3);
        let y: f64 = rng.gen_range(-1e3..1e3);
        let prec = rng.gen_range(4..40u32);
        let inputs: Bindings = [("x".to_string(), format!("{x:e}")), ("y".to_string(), format!("{y:e}"))].into();
        let cfg = EvalConfig::default();
        let xm = mp(&inputs["x"]);
        let ym = mp(&inputs["y"]);
        let exact = xm.add(&ym, 1200);
        let Some(uz) = exact.ufp() else { continue };

        // every point at `prec` bits: operand errors plus one final rounding
        let tuned = run_tuned(&p, &vec![prec; p.num_points()], &inputs, &cfg).unwrap().env["z"].clone();
        let xt = MpFloat::from_decimal(&inputs["x"], prec).unwrap();
        let yt = MpFloat::from_decimal(&inputs["y"], prec).unwrap();
        let ex = xt.sub(&xm, 600).abs();
        let ey = yt.sub(&ym, 600).abs();
        let zt = xt.add(&yt, 600);
        let round = MpFloat::from_parts(false, 1u32.into(), zt.ufp().unwrap_or(-600) - prec as i64, 8);
        let bound = ex.add(&ey, 600).add(&round, 600);
        assert!(tuned.sub(&exact, 1200).abs() <= bound);

        // operands widened per the addition rule: one-ulp result bound
        let (ux, uy) = (xm.ufp().unwrap(), ym.ufp().unwrap());
        let mut w = vec![prec; p.num_points()];
        for (name, u) in [("x", ux), ("y", uy)] {
            let v = p.var_id(name).unwrap();
            let wide = (prec as i64 + u - uz + 1).clamp(1, 500) as u32;
            for i in 0..p.num_points() {
                if matches!(p.points[i], PointKind::Input(q) | PointKind::Read(q) if q == v) {
                    w[i] = wide;
                }
            }
        }
        let tuned = run_tuned(&p, &w, &inputs, &cfg).unwrap().env["z"].clone();
        let one_ulp = MpFloat::from_parts(false, 1u32.into(), uz - prec as i64 + 1, 8);
        assert!(tuned.sub(&exact, 1200).abs() <= one_ulp, "x={x} y={y} p={prec}");
    }
}

#[test]
fn ranges_bound_every_visit() {
    let src = "a = 0.3; b = -2.0; t = 0.0;
        while (t < 30.0) { a = a * 0.9 - b / 5.0; b = b + a * 0.25; t = t + 1.0; }";
    let p = parse(src).unwrap();
    let cfg = EvalConfig::default();
    let u = analyze_ranges(&p, 300, &closed(), &cfg).unwrap();
    let mut rec = RangeRecorder::<MpFloat>::new(p.num_points());
    execute(&p, &vec![300; p.num_points()], &Bindings::new(), &cfg, Some(&mut rec)).unwrap();
    for i in 0..p.num_points() {
        let hi = rec.max_abs[i].as_ref().unwrap();
        let ufp = u.ufp(ControlPoint(i as u32)).unwrap();
        let limit = MpFloat::from_parts(false, 1u32.into(), ufp + 1, 8);
        assert!(*hi < limit);
    }
}

#[test]
fn deterministic_and_sampled() {
    let p = parse("x = 0.0; v = 1.0; while (x < 3.0) { v = v * 0.5 + 0.75; x = x + v; }").unwrap();
    let cfg = EvalConfig {
        sample_vars: vec!["x".into(), "v".into()],
        ..Default::default()
    };
    let a = run_reference(&p, 120, &Bindings::new(), &cfg).unwrap();
    let b = run_reference(&p, 120, &Bindings::new(), &cfg).unwrap();
    assert_eq!(a.env, b.env);
    assert_eq!(a.samples, b.samples);
    assert_eq!(a.samples.rows.len() as u64, a.iterations);
    let csv = a.samples.to_csv();
    assert!(csv.starts_with("step,variable,value\n1,x,1.25e0\n1,v,1.25e0\n"), "{csv}");
}

#[test]
fn unknown_sample_variable() {
    let p = parse("x = 1.0;").unwrap();
    let cfg = EvalConfig {
        sample_vars: vec!["nope".into()],
        ..Default::default()
    };
    let e = run_reference(&p, 53, &Bindings::new(), &cfg).unwrap_err();
    assert_eq!(e.kind, EvalErrorKind::UnknownSample("nope".into()));
}
