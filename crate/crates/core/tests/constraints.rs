use nsbtune::constraints::*;
use nsbtune::evaluator::*;
use nsbtune::frontend::*;
use nsbtune::numerics::NumericConfig;
use nsbtune::solver::solve_monotone;
use proptest::prelude::*;

mod common;
use common::{constraint, distance, find, operand, system, var, xi_of};

#[test]
fn ilp_distance_statement() {
    let d = distance();
    let s = system(&d, false);
    assert_eq!(s.constraints_from(Origin::Statement(0)).count(), 17, "{}", s.dump());
    assert!(s.is_monotone());

    assert_eq!(operand(&s, d.muls[0], d.inner), vec![7, -7]);
    assert_eq!(operand(&s, d.muls[1], d.inner), vec![6, -7]);
    assert_eq!(operand(&s, d.inner, d.outer), vec![7, -7]);
    assert_eq!(operand(&s, d.muls[2], d.outer), vec![-3, -7]);
    for r in d.dx_reads {
        assert_eq!(operand(&s, r, d.muls[0]).iter().sum::<i64>(), -1);
    }
    let sq = constraint(&s, var(&s, IntVar::Nsb(d.outer)), var(&s, IntVar::Nsb(d.sqrt)));
    assert_eq!(sq.rhs.terms.len(), 1);
    assert_eq!(sq.rhs.constant(), -1);

    let xi_bounds: Vec<_> = s
        .constraints
        .iter()
        .filter(|c| s.vars[c.lhs].kind() == VarKind::Xi)
        .collect();
    assert_eq!(xi_bounds.len(), 5);
    assert!(xi_bounds.iter().all(|c| c.rhs.terms.is_empty() && c.rhs.pieces == vec![1]));

    let text = s.dump();
    let line = format!(
        "nsb({}) >= nsb({}) + xi({})({}, {}) - 3 - 7",
        d.muls[2], d.outer, d.outer, d.inner, d.muls[2]
    );
    assert!(text.contains(&line), "{text}");
}

#[test]
fn refined_distance_statement() {
    let d = distance();
    let s = system(&d, true);
    let (a, b) = (d.muls[0], d.muls[1]);
    let xi = xi_of(&s, d.inner);
    let re = var(&s, IntVar::Nsbe(d.inner));
    let (an, bn) = (var(&s, IntVar::Nsb(a)), var(&s, IntVar::Nsb(b)));
    let (ae, be) = (var(&s, IntVar::Nsbe(a)), var(&s, IntVar::Nsbe(b)));

    let cross: Vec<_> = s.constraints.iter().filter(|c| c.lhs == re).collect();
    assert_eq!(cross.len(), 4);
    let c = cross.iter().find(|c| c.rhs.terms.contains(&(-1, an))).unwrap();
    assert_eq!(c.rhs.pieces, vec![7, -6]);
    let mut terms = c.rhs.terms.clone();
    terms.sort();
    let mut want = vec![(1, bn), (-1, an), (1, be), (1, xi)];
    want.sort();
    assert_eq!(terms, want);

    let def = s.xi_defs.iter().find(|x| x.xi == xi).unwrap();
    assert_eq!(def.args[0].pieces, vec![6, -7]);
    assert_eq!(def.args[0].terms, vec![(1, an), (1, ae)]);
    assert_eq!(def.args[1].pieces, vec![7, -6]);
    assert_eq!(def.args[1].terms, vec![(1, bn), (1, be)]);
    assert_eq!(s.xi_defs.len(), 2);

    let me = var(&s, IntVar::Nsbe(d.muls[0]));
    let (xn, xe) = (var(&s, IntVar::Nsb(d.dx_reads[0])), var(&s, IntVar::Nsbe(d.dx_reads[0])));
    let ye = var(&s, IntVar::Nsbe(d.dx_reads[1]));
    let prod = s
        .constraints
        .iter()
        .find(|c| c.lhs == me && c.rhs.terms.contains(&(1, xn)))
        .unwrap();
    assert_eq!(prod.rhs.terms, vec![(1, xn), (1, xe), (1, ye)]);
    assert_eq!(prod.rhs.pieces, vec![-2]);
    assert!(!s.is_monotone());
}

#[test]
fn requirement_chain() {
    let p = parse("x = 1.0; require_nsb(x, 11);").unwrap();
    let u = analyze_ranges(&p, 200, &[Bindings::new()], &EvalConfig::default()).unwrap();
    let s = gen_ilp(&p, &u, &compute_def_use(&p), &GenConfig::default()).unwrap();
    let text = s.dump();
    assert_eq!(text, "nsb(l1) >= nsb(l0)\nnsb(l2) >= 11\nnsb(l0) >= nsb(l2)\n");
}

#[test]
fn same_magnitude_addition() {
    let opts = ParseOptions {
        inputs: vec!["a".into(), "b".into()],
        ..Default::default()
    };
    let p = parse_with("r = a + b;", &opts).unwrap();
    let u = UfpMap::from_ufps(p.num_points(), (0..p.num_points()).map(|i| (ControlPoint(i as u32), 0)), NumericConfig::default());
    let s = gen_ilp(&p, &u, &compute_def_use(&p), &GenConfig::default()).unwrap();
    let add = find(&p, PointKind::Binary(BinOp::Add))[0];
    for r in find(&p, PointKind::Read(p.var_id("a").unwrap())) {
        assert_eq!(operand(&s, r, add).iter().sum::<i64>(), 0);
    }
}

#[test]
fn no_binary_ops_refined_adds_only_seeds() {
    let p = parse("x = 1.5; y = sqrt(x); require_nsb(y, 8);").unwrap();
    let u = analyze_ranges(&p, 200, &[Bindings::new()], &EvalConfig::default()).unwrap();
    let links = compute_def_use(&p);
    let c1 = gen_ilp(&p, &u, &links, &GenConfig::default()).unwrap();
    let c2 = gen_refined(&p, &u, &links, &GenConfig::default()).unwrap();
    assert!(c2.xi_defs.is_empty());
    let nsb_only: Vec<_> = c2
        .constraints
        .iter()
        .filter(|c| c2.vars[c.lhs].kind() == VarKind::Nsb)
        .cloned()
        .collect();
    assert_eq!(nsb_only, c1.constraints);
    assert_eq!(c2.constraints_from(Origin::Seed).count(), 1);
}

#[test]
fn empty_program() {
    let p = parse("").unwrap();
    let u = UfpMap::empty(0, NumericConfig::default());
    let s = gen_ilp(&p, &u, &compute_def_use(&p), &GenConfig::default()).unwrap();
    let st = system_stats(&s);
    assert_eq!((st.num_vars, st.num_constraints), (0, 0));
}

#[test]
fn unvisited_requirement_is_an_error() {
    let p = parse("a = 1.0; b = 0.0; if (a > 2.0) { b = a * 3.0; require_nsb(b, 10); }").unwrap();
    let u = analyze_ranges(&p, 200, &[Bindings::new()], &EvalConfig::default()).unwrap();
    let e = gen_ilp(&p, &u, &compute_def_use(&p), &GenConfig::default()).unwrap_err();
    assert!(matches!(e, ConstraintError::Unvisited { .. }), "{e}");
}

#[test]
fn definitions_that_never_ran_are_not_linked() {
    let p = parse("a = 1.0; b = 0.0; if (a > 2.0) { b = a * 3.0; } require_nsb(b, 10);").unwrap();
    let u = analyze_ranges(&p, 200, &[Bindings::new()], &EvalConfig::default()).unwrap();
    let s = gen_ilp(&p, &u, &compute_def_use(&p), &GenConfig::default()).unwrap();
    let a = solve_monotone(&s).unwrap();
    let mul = find(&p, PointKind::Binary(BinOp::Mul))[0];
    assert_eq!(a.nsb(mul), 0);
    let init = find(&p, PointKind::Literal)[1];
    assert_eq!(a.nsb(init), 10);
}

#[test]
fn missing_range_inside_executed_statement() {
    let p = parse("x = 1.0 + 2.0;").unwrap();
    let u = UfpMap::from_ufps(p.num_points(), [(ControlPoint(1), 1)], NumericConfig::default());
    let e = gen_ilp(&p, &u, &compute_def_use(&p), &GenConfig::default()).unwrap_err();
    assert!(matches!(e, ConstraintError::NoRange(_)));
}

#[test]
fn zero_results_are_flagged() {
    let p = parse("a = 2.0; b = a - a; c = b + 1.0;").unwrap();
    let u = analyze_ranges(&p, 200, &[Bindings::new()], &EvalConfig::default()).unwrap();
    let s = gen_ilp(&p, &u, &compute_def_use(&p), &GenConfig::default()).unwrap();
    let sub = find(&p, PointKind::Binary(BinOp::Sub))[0];
    assert_eq!(s.zero_range_points, vec![sub]);
    // the subtraction borrowed its operands' magnitude: ufp(a) - ufp(a) + xi
    for r in find(&p, PointKind::Read(p.var_id("a").unwrap())) {
        assert_eq!(operand(&s, r, sub).iter().sum::<i64>(), 0);
    }
}

#[test]
fn loop_counter_widths() {
    // t = t + dt: the carried link into the addition gives back the carry bit the body adds
    let p = parse("t = 0.0; dt = 0.25; while (t < 3.0) { t = t + dt; } require_nsb(t, 20);").unwrap();
    let u = analyze_ranges(&p, 200, &[Bindings::new()], &EvalConfig::default()).unwrap();
    let links = compute_def_use(&p);
    let s = gen_ilp(&p, &u, &links, &GenConfig::default()).unwrap();
    let t = p.var_id("t").unwrap();
    let defs = find(&p, PointKind::Def(t));
    let body_def = defs[1];
    let carried: Vec<_> = links
        .reads()
        .flat_map(|r| links.defs_of(r).map(move |(d, k)| (d, r, k)))
        .filter(|(d, _, k)| *d == body_def && matches!(k, LinkKind::Carried(_)))
        .collect();
    let shifts: Vec<i64> = carried
        .iter()
        .map(|(d, r, _)| constraint(&s, var(&s, IntVar::Nsb(*d)), var(&s, IntVar::Nsb(*r))).rhs.constant())
        .collect();
    // the comparison read is not fed by the def within an iteration, so it keeps its full demand
    assert_eq!(shifts, vec![0, -1], "{}", s.dump());
    // the read after the loop sees 13 condition evaluations: 4 more bits
    let req = find(&p, PointKind::Require(t))[0];
    let c = constraint(&s, var(&s, IntVar::Nsb(body_def)), var(&s, IntVar::Nsb(req)));
    assert_eq!(c.rhs.constant(), 4);

    let plain = GenConfig {
        loop_model: LoopModel::Plain,
        ..Default::default()
    };
    let s = gen_ilp(&p, &u, &links, &plain).unwrap();
    assert!(s.constraints_from(Origin::DefUse).all(|c| c.rhs.constant() == 0));
}

#[derive(Debug, Clone)]
enum E {
    Var(usize),
    Lit(f64),
    Bin(BinOp, Box<E>, Box<E>),
    Neg(Box<E>),
    Sqrt(Box<E>),
}

fn expr_src(e: &E) -> String {
    match e {
        E::Var(i) => ["a", "b", "c"][*i].to_string(),
        E::Lit(x) => format!("{x:?}"),
        E::Bin(op, l, r) => format!("({} {} {})", expr_src(l), op.symbol(), expr_src(r)),
        E::Neg(a) => format!("-({})", expr_src(a)),
        E::Sqrt(a) => format!("sqrt({} * {} + 1.0)", expr_src(a), expr_src(a)),
    }
}

fn arb_expr() -> impl Strategy<Value = E> {
    let leaf = prop_oneof![(0..3usize).prop_map(E::Var), (1..40i32).prop_map(|k| E::Lit(k as f64 / 8.0))];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (
                prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul)],
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(op, a, b)| E::Bin(op, Box::new(a), Box::new(b))),
            inner.clone().prop_map(|a| E::Neg(Box::new(a))),
            inner.prop_map(|a| E::Sqrt(Box::new(a))),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn per_construct_counts(stmts in prop::collection::vec(arb_expr(), 1..4)) {
        let mut src = String::from("a = 1.25; b = -3.5; c = 0.375;\n");
        for (i, e) in stmts.iter().enumerate() {
            let target = ["a", "b", "c"][i % 3];
            src.push_str(&format!("{target} = {};\n", expr_src(e)));
        }
        let p = parse(&src).unwrap();
        let Ok(u) = analyze_ranges(&p, 200, &[Bindings::new()], &EvalConfig::default()) else {
            return Ok(());
        };
        let links = compute_def_use(&p);
        let c1 = gen_ilp(&p, &u, &links, &GenConfig::default()).unwrap();
        let c2 = gen_refined(&p, &u, &links, &GenConfig::default()).unwrap();
        for i in 0..p.num_points() {
            let cp = ControlPoint(i as u32);
            let PointKind::Binary(op) = p.points[i] else { continue };
            for s in [&c1, &c2] {
                let xi = xi_of(s, cp);
                let operand_rows = s.constraints.iter()
                    .filter(|c| s.vars[c.lhs].kind() == VarKind::Nsb && c.rhs.terms.iter().any(|t| t.1 == xi))
                    .count();
                prop_assert_eq!(operand_rows, 2);
            }
            let bound = |s: &ConstraintSystem| s.constraints.iter().filter(|c| c.lhs == xi_of(s, cp)).count();
            prop_assert_eq!(bound(&c1), 1);
            let nsbe_rows = c2.constraints.iter().filter(|c| c2.vars[c.lhs] == IntVar::Nsbe(cp)).count();
            let defs = c2.xi_defs.iter().filter(|d| d.xi == xi_of(&c2, cp)).count();
            if matches!(op, BinOp::Add | BinOp::Sub) {
                prop_assert_eq!(nsbe_rows, 4);
                prop_assert_eq!(defs, 1);
                prop_assert_eq!(bound(&c2), 0);
            } else {
                prop_assert_eq!(nsbe_rows, 2);
                prop_assert_eq!(defs, 0);
                prop_assert_eq!(bound(&c2), 1);
            }
        }
        prop_assert!(c1.xi_defs.is_empty());
        prop_assert!(c1.vars.iter().all(|v| v.kind() != VarKind::Nsbe));
    }
}
