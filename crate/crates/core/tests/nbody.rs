use nsbtune::evaluator::{run_reference, Bindings, EvalConfig};
use nsbtune::frontend::parse;
use nsbtune::nbody::*;

fn program(t_max: f64, req: u32) -> String {
    build_nbody_program(&NbodyConstants::standard(), 0.01, t_max, req).unwrap()
}

#[test]
fn listing_constants_appear_verbatim() {
    let src = program(1000.0, 11);
    for line in [
        "dt = 0.01;",
        "t_max = 1000.0;",
        "days_per_year = 365.24;",
        "xJupiter = 4.8414316;",
        "vxJupiter = 0.0016600767 * days_per_year;",
        "massJupiter = 9.5479196E-4 * solar_mass;",
        "xSaturn = 8.343367;",
        "vxSaturn = -0.002767425 * days_per_year;",
        "massSaturn = 2.8588597E-4 * solar_mass;",
        "  mag = dt / (distance * distance * distance);",
        "  distance = sqrt(dx * dx + dy * dy + dz * dz);",
        "while (t < t_max) {",
        "require_nsb(zNeptune, 11);",
    ] {
        assert!(src.lines().any(|l| l == line), "missing `{line}`");
    }
    // the fixed body is never written inside the loop
    assert!(!src.contains("vxSun = vxSun"));
    assert!(!src.contains("xSun = xSun"));
    assert_eq!(src.matches("require_nsb").count(), 12);
}

#[test]
fn program_size() {
    let src = program(1000.0, 11);
    let lines = src.lines().count();
    assert!((100..=660).contains(&lines), "{lines} lines");
    let p = parse(&src).unwrap();
    assert_eq!(p.requirements().len(), 12);
}

fn digits(s: &str) -> String {
    let mantissa = s.trim_start_matches('-').split(['e', 'E']).next().unwrap();
    mantissa
        .chars()
        .filter(|c| c.is_ascii_digit())
        .collect::<String>()
        .trim_start_matches('0')
        .trim_end_matches('0')
        .to_string()
}

/// Every shipped value is the shortest decimal that reads back to the single-precision
/// rounding of the double in its comment.
#[test]
fn constants_are_single_precision_shortest_forms() {
    let text = include_str!("../data/nbody_constants.txt");
    let mut checked = 0;
    for line in text.lines() {
        let Some((kv, comment)) = line.split_once('#') else { continue };
        let Some((_, value)) = kv.split_once('=') else { continue };
        let value = value.trim();
        let Ok(double) = comment.trim().parse::<f64>() else { continue };
        let single = double as f32;
        assert_eq!(value.parse::<f32>().unwrap(), single, "{line}");
        assert_eq!(digits(value), digits(&format!("{single:e}")), "{line}");
        checked += 1;
    }
    assert_eq!(checked, 28);
    // long forms printed next to the emitted code
    let c = NbodyConstants::standard();
    let jupiter = &c.bodies[1];
    assert_eq!(jupiter.position[0].parse::<f32>().unwrap() as f64, 4.841431617736816);
    assert_eq!(jupiter.position[1].parse::<f32>().unwrap() as f64, -1.1603200435638428);
    assert_eq!(c.solar_mass.parse::<f32>().unwrap(), (4.0 * std::f64::consts::PI * std::f64::consts::PI) as f32);
}

#[test]
fn standard_bodies() {
    let c = NbodyConstants::standard();
    assert_eq!(c.planets(), ["Jupiter", "Saturn", "Uranus", "Neptune"]);
    assert_eq!(c.bodies[0].name, "Sun");
    assert!(c.bodies[0].position.iter().chain(&c.bodies[0].velocity).all(|v| v.parse::<f64>().unwrap() == 0.0));
}

#[test]
fn incomplete_constants_are_rejected() {
    let full = include_str!("../data/nbody_constants.txt");
    let without_mass: String = full.lines().filter(|l| !l.starts_with("saturn.mass")).map(|l| format!("{l}\n")).collect();
    assert_eq!(
        NbodyConstants::parse(&without_mass).unwrap_err(),
        NbodyError::Missing {
            body: "Saturn".into(),
            field: "mass".into()
        }
    );
    let no_scale: String = full.lines().filter(|l| !l.starts_with("solar_mass")).map(|l| format!("{l}\n")).collect();
    assert!(matches!(NbodyConstants::parse(&no_scale), Err(NbodyError::MissingGlobal(_))));
    assert!(matches!(NbodyConstants::parse("days_per_year 365.24\n"), Err(NbodyError::Syntax { line: 1, .. })));
    let one = "days_per_year = 1.0\nsolar_mass = 1.0\nbody = Sun\nsun.x = 0.0\nsun.y = 0.0\nsun.z = 0.0\n\
               sun.vx = 0.0\nsun.vy = 0.0\nsun.vz = 0.0\nsun.mass = 1.0\n";
    let lonely = NbodyConstants::parse(one).unwrap();
    assert_eq!(build_nbody_program(&lonely, 0.01, 1.0, 11).unwrap_err(), NbodyError::TooFewBodies(1));
}

#[test]
fn horizons() {
    assert_eq!(t_max_for_years(10.0, 0.01), 3652.395);
    assert_eq!(t_max_for_years(1.0, 0.01), 365.235);
    let p = parse(&program(t_max_for_years(0.1, 0.01), 11)).unwrap();
    let t = run_reference(&p, 64, &Bindings::new(), &EvalConfig::default()).unwrap();
    assert_eq!(t.iterations, 3652);
}

/// With no steps the only error left is the rounding of the decimal initial positions to
/// their widths, at most half an ulp of the required width per coordinate.
#[test]
fn zero_horizon_distances() {
    let nsbs = [11, 24, 53];
    let s = run_experiment(&ExperimentPlan::new(nsbs.to_vec(), vec![0.0])).unwrap();
    let c = NbodyConstants::standard();
    assert_eq!(s.cells.len(), 3);
    for cell in &s.cells {
        assert_eq!(cell.tuned_iterations, 0);
        assert_eq!(cell.distances.len(), 4);
        for (body, d) in &cell.distances {
            let spec = c.bodies.iter().find(|b| &b.name == body).unwrap();
            let bound = spec
                .position
                .iter()
                .map(|x| {
                    let x: f64 = x.parse().unwrap();
                    2f64.powi(x.abs().log2().floor() as i32 - cell.nsb as i32).powi(2)
                })
                .sum::<f64>()
                .sqrt();
            assert!(*d <= bound, "nsb {}: {body}: {d} > {bound}", cell.nsb);
        }
    }
    assert_eq!(s.energy_drift(), 0.0);
}

#[test]
fn summary_and_series_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut plan = ExperimentPlan::new(vec![24, 11], vec![0.05]);
    plan.out_dir = Some(dir.path().to_path_buf());
    plan.sample_every = 500;
    plan.jobs = 2;
    let s = run_experiment(&plan).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(csv, s.to_csv());
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "nsb,horizon_years,body,distance_au,tune_seconds,run_seconds");
    assert_eq!(rows.len(), 1 + 2 * 4);
    assert!(rows[1].starts_with("24,0.05,Jupiter,"));
    assert!(rows[5].starts_with("11,0.05,Jupiter,"));
    let series = std::fs::read_to_string(dir.path().join("series_nsb11_0.05y.csv")).unwrap();
    let mut lines = series.lines();
    assert_eq!(lines.next(), Some("step,body,distance_au"));
    // 1826 iterations sampled every 500 for four bodies
    let steps: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(steps, ["500", "500", "500", "500", "1000", "1000", "1000", "1000", "1500", "1500", "1500", "1500"]);
    assert!(s.distance(11, 0.05, "Neptune").unwrap() >= s.distance(24, 0.05, "Neptune").unwrap());
}

#[test]
fn bad_plans() {
    let mut plan = ExperimentPlan::new(vec![0], vec![1.0]);
    assert!(matches!(run_experiment(&plan), Err(ExperimentError::Plan(_))));
    plan.nsb = vec![11];
    plan.years = vec![-1.0];
    assert!(matches!(run_experiment(&plan), Err(ExperimentError::Plan(_))));
}

#[test]
fn energy_is_conserved_over_a_year() {
    let c = NbodyConstants::standard();
    let p = parse(&program(t_max_for_years(1.0, 0.01), 11)).unwrap();
    let start = parse(&program(t_max_for_years(0.0, 0.01), 11)).unwrap();
    let e = |p| {
        let t = run_reference(p, 500, &Bindings::new(), &EvalConfig::default()).unwrap();
        energy(&c, |v| t.env[v].to_f64())
    };
    let (e0, e1) = (e(&start), e(&p));
    assert!(e0 < 0.0);
    assert!(((e1 - e0) / e0).abs() < 1e-3, "{e0} -> {e1}");
}
