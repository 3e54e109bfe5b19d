//! Acceptance checks. Each criterion prints one PASS or FAIL line with the
//! measurement behind it; the process exits non-zero if any fails.
//!
//! Every reference value is computed here by an oracle that shares no code
//! with the library.

use std::collections::HashMap;
use std::process::ExitCode;
use std::time::Instant;

use chrono::{DateTime, Duration, NaiveDate, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tunai::eval::{
    assign_split, f1_score, mae, permutation_importance, roc_auc, stratified_split, ConfusionMatrix, F1Mode, Metric,
};
use tunai::features::{aggregate_matrix, Dataset, Level, Medians, Row, Split, Task};
use tunai::geo::{haversine_nm, solar_day, GeoPoint, EARTH_RADIUS_M, METERS_PER_NM};
use tunai::ingest::{EventKind, N_LAYERS};
use tunai::learn::linear::{elastic_net_cd, logistic_objective};
use tunai::learn::{
    fit_cart, fit_gbdt, fit_linear, fit_model, BoostParams, BoostVariant, Criterion, LinearParams, Matrix, ModelBody,
    ModelKind, Output, ParamValue, Params, TrainedModel, TreeParams,
};
use tunai::learn::tree::Node;
use tunai::pipeline::{build_dataset, Column, DropRule, EchoWindow};
use tunai::synth::{generate, SynthConfig, ViolationRates};

type Outcome = Result<String, String>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------- solar

/// Geometric solar elevation in degrees at `minutes` after UTC midnight of
/// `date`, from the NOAA solar calculator series (Meeus, low precision).
fn noaa_elevation(lat: f64, lon: f64, date: NaiveDate, minutes: f64) -> f64 {
    let days = (date - NaiveDate::from_ymd_opt(2000, 1, 1).unwrap()).num_days() as f64;
    let jc = (days + minutes / 1440.0 - 0.5) / 36525.0;
    let l0 = (280.46646 + jc * (36000.76983 + jc * 0.0003032)) % 360.0;
    let m = 357.52911 + jc * (35999.05029 - 0.0001537 * jc);
    let e = 0.016708634 - jc * (0.000042037 + 0.0000001267 * jc);
    let mr = m.to_radians();
    let c = mr.sin() * (1.914602 - jc * (0.004817 + 0.000014 * jc))
        + (2.0 * mr).sin() * (0.019993 - 0.000101 * jc)
        + (3.0 * mr).sin() * 0.000289;
    let omega = (125.04 - 1934.136 * jc).to_radians();
    let app_long = (l0 + c - 0.00569 - 0.00478 * omega.sin()).to_radians();
    let obliq0 = 23.0 + (26.0 + (21.448 - jc * (46.815 + jc * (0.00059 - jc * 0.001813))) / 60.0) / 60.0;
    let obliq = (obliq0 + 0.00256 * omega.cos()).to_radians();
    let decl = (obliq.sin() * app_long.sin()).asin();
    let y = (obliq / 2.0).tan().powi(2);
    let l0r = l0.to_radians();
    let eq_time = 4.0
        * (y * (2.0 * l0r).sin() - 2.0 * e * mr.sin() + 4.0 * e * y * mr.sin() * (2.0 * l0r).cos()
            - 0.5 * y * y * (4.0 * l0r).sin()
            - 1.25 * e * e * (2.0 * mr).sin())
        .to_degrees();
    let true_solar = (minutes + eq_time + 4.0 * lon).rem_euclid(1440.0);
    let ha = (true_solar / 4.0 - 180.0).to_radians();
    let phi = lat.to_radians();
    let cos_zen = phi.sin() * decl.sin() + phi.cos() * decl.cos() * ha.cos();
    90.0 - cos_zen.clamp(-1.0, 1.0).acos().to_degrees()
}

/// Sunrise and sunset in minutes after UTC midnight of `date`: the
/// crossings of -0.833 degrees on either side of the elevation maximum,
/// located by bisection.
fn noaa_sun_minutes(lat: f64, lon: f64, date: NaiveDate) -> (f64, f64) {
    let f = |t: f64| noaa_elevation(lat, lon, date, t) + 0.833;
    // solar noon: maximize elevation near the mean-time estimate
    let (mut lo, mut hi) = (720.0 - 4.0 * lon - 30.0, 720.0 - 4.0 * lon + 30.0);
    for _ in 0..100 {
        let (a, b) = (lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0);
        if f(a) < f(b) {
            lo = a
        } else {
            hi = b
        }
    }
    let noon = (lo + hi) / 2.0;
    let bisect = |mut day: f64, mut night: f64| {
        for _ in 0..60 {
            let mid = (day + night) / 2.0;
            if f(mid) > 0.0 {
                day = mid
            } else {
                night = mid
            }
        }
        (day + night) / 2.0
    };
    (bisect(noon, noon - 720.0), bisect(noon, noon + 720.0))
}

fn minutes_of(date: NaiveDate, t: DateTime<Utc>) -> f64 {
    let base = Utc.from_utc_datetime(&date.and_hms_opt(0, 0, 0).unwrap());
    (t - base).num_milliseconds() as f64 / 60_000.0
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let cases = [
        (0.0, 0.0, "2019-03-21"),
        (5.0, 55.0, "2019-06-21"),
        (-5.0, 55.0, "2019-12-21"),
        (-8.0, 43.0, "2019-09-23"),
        (12.0, -20.0, "2018-01-15"),
        (-12.0, -30.0, "2018-07-04"),
        (20.0, 150.0, "2020-02-29"),
        (-20.0, -150.0, "2020-08-08"),
        (35.0, 10.0, "2017-04-10"),
        (-35.0, 18.0, "2017-10-10"),
        (45.0, -125.0, "2021-05-05"),
        (-45.0, 170.0, "2021-11-30"),
        (55.0, 37.6, "2016-03-01"),
        (-33.9, 151.2, "2016-06-15"),
        (40.7, -74.0, "2019-07-01"),
        (1.3, 103.8, "2019-10-31"),
        (-1.0, 73.0, "2022-01-01"),
        (60.0, 5.0, "2022-09-15"),
        (-55.0, -68.0, "2015-12-31"),
        (25.0, -179.5, "2023-04-01"),
    ];
    let mut worst: f64 = 0.0;
    for (lat, lon, d) in cases {
        let date: NaiveDate = d.parse().unwrap();
        let day = solar_day(GeoPoint::new(lat, lon).unwrap(), date).map_err(|e| e.to_string())?;
        let (rise, set) = noaa_sun_minutes(lat, lon, date);
        let got_rise = minutes_of(date, day.sunrise_utc.time().ok_or("missing sunrise")?);
        let got_set = minutes_of(date, day.sunset_utc.time().ok_or("missing sunset")?);
        worst = worst.max((got_rise - rise).abs()).max((got_set - set).abs());
    }
    let eq_date: NaiveDate = "2019-03-21".parse().unwrap();
    let eq = solar_day(GeoPoint::new(0.0, 0.0).unwrap(), eq_date).unwrap();
    let eq_rise = (minutes_of(eq_date, eq.sunrise_utc.time().unwrap()) - 360.0).abs();
    let eq_set = (minutes_of(eq_date, eq.sunset_utc.time().unwrap()) - 1080.0).abs();
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 3.0 && eq_rise <= 10.0 && eq_set <= 10.0 && secs < 1.0,
        format!(
            "20 cases, worst error {worst:.2} min; equinox offsets {eq_rise:.1}/{eq_set:.1} min; {:.3} s",
            secs
        ),
    )
}

// ---------------------------------------------------------------- geometry

/// Central angle by the atan2 (Vincenty, sphere) formula.
fn vincenty_nm(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (p1, p2) = (a.0.to_radians(), b.0.to_radians());
    let dl = (b.1 - a.1).to_radians();
    let num = ((p2.cos() * dl.sin()).powi(2) + (p1.cos() * p2.sin() - p1.sin() * p2.cos() * dl.cos()).powi(2)).sqrt();
    let den = p1.sin() * p2.sin() + p1.cos() * p2.cos() * dl.cos();
    EARTH_RADIUS_M * num.atan2(den) / METERS_PER_NM
}

fn criterion_2() -> Outcome {
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let a = (r.random_range(-90.0..=90.0), r.random_range(-180.0..180.0));
        // a share of short hops, where naive formulas lose precision
        let b = if i % 4 == 0 {
            (
                (a.0 + r.random_range(-0.01..0.01f64)).clamp(-90.0, 90.0),
                (a.1 + r.random_range(-0.01..0.01f64)).clamp(-180.0, 179.999),
            )
        } else {
            (r.random_range(-90.0..=90.0), r.random_range(-180.0..180.0))
        };
        let got = haversine_nm(GeoPoint::new(a.0, a.1).unwrap(), GeoPoint::new(b.0, b.1).unwrap());
        let want = vincenty_nm(a, b);
        let rel = if want == 0.0 { got } else { (got - want).abs() / want };
        worst = worst.max(rel);
    }
    check(worst <= 1e-6, format!("1000 pairs, worst relative error {worst:.2e}"))
}

// ---------------------------------------------------------------- pipeline

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let cfg = SynthConfig {
        seed: 3,
        n_buoys: 500,
        days: 30,
        violations: ViolationRates::uniform(0.05),
        ..SynthConfig::default()
    };
    let world = generate(&cfg).map_err(|e| e.to_string())?;
    let generated = start.elapsed().as_secs_f64();
    let (examples, report) =
        build_dataset(&world.events, &world.records, &world.ocean, &world.bathy, 72).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();

    let mut problems = Vec::new();
    let mut planted = 0;
    for rule in DropRule::ALL {
        let (got, want) = (report.count(rule), world.injected(rule));
        planted += want;
        if got != want {
            problems.push(format!("{rule}: dropped {got}, planted {want}"));
        }
        if rule != DropRule::Overlap && want == 0 {
            problems.push(format!("{rule}: nothing planted"));
        }
    }

    let truth: HashMap<(&str, i64), _> = world
        .truth
        .hours
        .iter()
        .map(|h| ((&*h.buoy_id, h.t_utc.timestamp()), h))
        .collect();
    let buoy_of: HashMap<&str, &str> = world.events.iter().map(|e| (&*e.event_id, &*e.buoy_id)).collect();
    let (mut cells, mut censored_seen) = (0usize, 0usize);
    for ex in &examples {
        let buoy = buoy_of[&*ex.event_id];
        for col in ex.window.columns.iter().flatten() {
            match truth.get(&(buoy, col.t_utc.timestamp())) {
                Some(h) if !h.censored && col.layers == h.layers => cells += 1,
                _ => problems.push(format!("{}: cell at {} differs from truth", ex.event_id, col.t_utc)),
            }
        }
        let (start, end) = (ex.window.start_utc(), ex.window.end_utc);
        let mut t = start + Duration::hours(1);
        t = Utc.timestamp_opt(t.timestamp().div_euclid(3600) * 3600, 0).unwrap();
        let mut censored = 0;
        while t <= end {
            if t > start && truth.get(&(buoy, t.timestamp())).is_some_and(|h| h.censored) {
                censored += 1;
            }
            t += Duration::hours(1);
        }
        censored_seen += censored;
        if censored != ex.window.n_zero_readings() {
            problems.push(format!(
                "{}: N_NaN {} but {censored} censored hours",
                ex.event_id,
                ex.window.n_zero_readings()
            ));
        }
    }
    if secs >= 30.0 {
        problems.push(format!("took {secs:.1} s"));
    }
    let detail = format!(
        "{} events, {planted} planted violations matched per rule, {} examples, {cells} cells and {censored_seen} \
         censored hours checked; {:.1} s ({generated:.1} s generating)",
        world.events.len(),
        examples.len(),
        secs
    );
    if problems.is_empty() {
        Ok(detail)
    } else {
        problems.truncate(5);
        Err(format!("{detail}; {}", problems.join("; ")))
    }
}

// ---------------------------------------------------------------- aggregation

fn random_window(r: &mut ChaCha8Rng, w: usize) -> (EchoWindow, Vec<Option<[f64; N_LAYERS]>>) {
    let p = GeoPoint::new(0.0, 60.0).unwrap();
    let anchor = solar_day(p, NaiveDate::from_ymd_opt(2019, 6, 1).unwrap()).unwrap();
    let end = anchor.sunset_utc.time().unwrap();
    let missing = r.random_range(0.0..0.6);
    let cells: Vec<Option<[f64; N_LAYERS]>> = (0..w)
        .map(|_| {
            (r.random::<f64>() >= missing).then(|| std::array::from_fn(|_| (r.random::<f64>() * 50.0).powi(2) / 50.0))
        })
        .collect();
    let columns = cells
        .iter()
        .enumerate()
        .map(|(x, c)| {
            c.map(|layers| Column {
                t_utc: end - Duration::hours(x as i64),
                position: p,
                layers,
            })
        })
        .collect();
    let window = EchoWindow {
        event_id: "E".into(),
        w,
        anchor,
        anchor_sunset: end,
        end_utc: end,
        columns,
        track: Vec::new(),
    };
    (window, cells)
}

fn criterion_4() -> Outcome {
    let mut r = rng(4);
    for case in 0..200 {
        let w = [24, 48, 72][case % 3];
        let (window, cells) = random_window(&mut r, w);
        let agg = aggregate_matrix(&window);
        let mut total: f64 = 0.0;
        let mut layers = [0.0f64; N_LAYERS];
        let mut hours = vec![0.0f64; w];
        let mut missing = 0;
        for (x, c) in cells.iter().enumerate() {
            let Some(c) = c else {
                missing += 1;
                continue;
            };
            for (l, &v) in c.iter().enumerate() {
                if v > layers[l] {
                    layers[l] = v;
                }
                if v > hours[x] {
                    hours[x] = v;
                }
                if v > total {
                    total = v;
                }
            }
        }
        if agg.total != total || agg.layers != layers || agg.hours != hours || agg.n_nan != missing {
            return Err(format!("matrix {case} (W = {w}) differs from brute force"));
        }
    }
    Ok("200 random matrices equal the brute-force maxima exactly".into())
}

// ---------------------------------------------------------------- metrics

fn pairwise_auc(scores: &[f64], pos: &[bool]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if pos[i] && !pos[j] {
                den += 1.0;
                num += if scores[i] > scores[j] {
                    1.0
                } else if scores[i] == scores[j] {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    num / den
}

fn criterion_5() -> Outcome {
    let mut problems = Vec::new();
    // binary: rows observed, columns predicted
    let cm = ConfusionMatrix::from_counts(2, vec![50, 10, 5, 35]).unwrap();
    let f1 = f1_score(&cm, F1Mode::Binary).unwrap();
    if (f1 - 70.0 / 85.0).abs() > 1e-15 {
        problems.push(format!("binary F1 {f1}"));
    }
    // ternary, per-class F1 = 2tp / (2tp + fp + fn), weighted by support
    let cm = ConfusionMatrix::from_counts(3, vec![30, 5, 5, 4, 20, 6, 1, 4, 25]).unwrap();
    let want = (40.0 * (60.0 / 75.0) + 30.0 * (40.0 / 59.0) + 30.0 * (50.0 / 66.0)) / 100.0;
    let wf1 = f1_score(&cm, F1Mode::Weighted).unwrap();
    if (wf1 - want).abs() > 1e-12 {
        problems.push(format!("weighted F1 {wf1} vs {want}"));
    }
    let m = mae(&[1.0, 2.0, 5.0, -1.0], &[0.0, 4.0, 5.0, 2.0]).unwrap();
    if m != 1.5 {
        problems.push(format!("MAE {m}"));
    }

    let mut r = rng(5);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        // coarse scores force ties in some cases
        let coarse = case % 3 == 0;
        let n = 50;
        let pos: Vec<bool> = (0..n).map(|i| i % 5 == 0 || r.random::<f64>() < 0.4).collect();
        let scores: Vec<f64> = (0..n)
            .map(|i| {
                let s = r.random::<f64>() + if pos[i] { 0.3 } else { 0.0 };
                if coarse {
                    (s * 5.0).round()
                } else {
                    s
                }
            })
            .collect();
        let auc = roc_auc(&scores, &pos).unwrap();
        worst = worst.max((auc - pairwise_auc(&scores, &pos)).abs());
        let warped: Vec<f64> = scores.iter().map(|s| s.powi(3) + 2.0 * s - 7.0).collect();
        if roc_auc(&warped, &pos).unwrap() != auc {
            problems.push(format!("case {case}: AUC changed under a monotone transform"));
        }
    }
    if worst > 1e-12 {
        problems.push(format!("AUC off by {worst:.2e}"));
    }
    check(
        problems.is_empty(),
        if problems.is_empty() {
            format!("F1, weighted F1 and MAE exact; AUC within {worst:.1e} of the pairwise oracle; 100 transforms invariant")
        } else {
            problems.join("; ")
        },
    )
}

// ---------------------------------------------------------------- linear

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        b.swap(c, piv);
        for i in c + 1..n {
            let f = a[i][c] / a[c][c];
            for j in c..n {
                a[i][j] -= f * a[c][j];
            }
            b[i] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

fn random_matrix(r: &mut ChaCha8Rng, n: usize, p: usize) -> Matrix {
    Matrix::new(n, p, (0..n * p).map(|_| r.random_range(-2.0..2.0)).collect()).unwrap()
}

fn criterion_6() -> Outcome {
    let mut r = rng(6);
    let (n, p) = (60, 6);
    let x = random_matrix(&mut r, n, p);
    let y: Vec<f64> = (0..n)
        .map(|i| x.row(i).iter().enumerate().map(|(j, v)| v * (j as f64 - 2.0)).sum::<f64>() + r.random_range(-1.0..1.0))
        .collect();
    let alpha = 0.3;
    let sol = elastic_net_cd(&x, &y, alpha, 0.0, 1e-15, 100_000);
    let mut gram = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for i in 0..n {
        for a in 0..p {
            xty[a] += x.get(i, a) * y[i];
            for b in 0..p {
                gram[a][b] += x.get(i, a) * x.get(i, b);
            }
        }
    }
    for (a, row) in gram.iter_mut().enumerate() {
        row[a] += n as f64 * alpha;
    }
    let closed = solve(gram, xty);
    let ridge_err = sol.weights.iter().zip(&closed).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let mut grad_err: f64 = 0.0;
    for k in [1usize, 3] {
        let labels: Vec<usize> = (0..n).map(|_| r.random_range(0..k.max(2))).collect();
        let theta: Vec<f64> = (0..k * p + k).map(|_| r.random_range(-0.5..0.5)).collect();
        let (_, g) = logistic_objective(&x, &labels, k, &theta, 0.2, 0.3);
        let h = 1e-5;
        for j in 0..theta.len() {
            let mut up = theta.clone();
            let mut down = theta.clone();
            up[j] += h;
            down[j] -= h;
            let fd = (logistic_objective(&x, &labels, k, &up, 0.2, 0.3).0
                - logistic_objective(&x, &labels, k, &down, 0.2, 0.3).0)
                / (2.0 * h);
            grad_err = grad_err.max((fd - g[j]).abs());
        }
    }

    let lasso = LinearParams {
        l1_ratios: vec![1.0],
        alpha: Some(1e6),
        ..LinearParams::for_task(Task::Regression)
    };
    let big = fit_linear(&x, &y, Task::Regression, &lasso, 0).map_err(|e| e.to_string())?;
    let nonzero = big.weights.as_slice().iter().filter(|w| **w != 0.0).count();
    let cd = elastic_net_cd(&x, &y, 1e6, 1.0, 1e-8, 1000);
    let nonzero_cd = cd.weights.iter().filter(|w| **w != 0.0).count();

    check(
        ridge_err <= 1e-8 && grad_err <= 1e-6 && nonzero == 0 && nonzero_cd == 0,
        format!(
            "ridge off by {ridge_err:.1e}; logistic gradient off by {grad_err:.1e}; {nonzero}+{nonzero_cd} weights left \
             at large lasso penalty"
        ),
    )
}

// ---------------------------------------------------------------- trees

fn sse(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|a| (a - m).powi(2)).sum()
}

fn gini_weighted(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let p1 = v.iter().filter(|&&c| c == 1.0).count() as f64 / n;
    n * (1.0 - p1 * p1 - (1.0 - p1) * (1.0 - p1))
}

/// Best impurity over every (feature, cut between distinct values).
fn exhaustive(x: &Matrix, y: &[f64], impurity: fn(&[f64]) -> f64) -> f64 {
    let mut best = f64::INFINITY;
    for j in 0..x.cols() {
        let mut vals: Vec<f64> = x.column(j);
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let cut = (w[0] + w[1]) / 2.0;
            let (l, r): (Vec<(usize, f64)>, Vec<(usize, f64)>) =
                y.iter().copied().enumerate().partition(|(i, _)| x.get(*i, j) <= cut);
            let l: Vec<f64> = l.into_iter().map(|t| t.1).collect();
            let r: Vec<f64> = r.into_iter().map(|t| t.1).collect();
            best = best.min(impurity(&l) + impurity(&r));
        }
    }
    best
}

fn root_impurity(tree: &tunai::learn::Tree, x: &Matrix, y: &[f64], impurity: fn(&[f64]) -> f64) -> Option<f64> {
    let Node::Split { feature, threshold, .. } = &tree.nodes[0] else {
        return None;
    };
    let (mut l, mut r) = (Vec::new(), Vec::new());
    for (i, &v) in y.iter().enumerate() {
        if x.get(i, *feature) <= *threshold {
            l.push(v)
        } else {
            r.push(v)
        }
    }
    Some(impurity(&l) + impurity(&r))
}

fn gb_params(n_estimators: usize, max_depth: usize, subsample: f64) -> BoostParams {
    let mut p = BoostParams::defaults(BoostVariant::GradientBoosting);
    p.n_estimators = n_estimators;
    p.tree.max_depth = Some(max_depth);
    p.subsample = subsample;
    p
}

fn criterion_7() -> Outcome {
    let mut r = rng(7);
    let mut problems = Vec::new();
    let stump = |criterion| TreeParams {
        max_depth: Some(1),
        criterion,
        ..TreeParams::default()
    };
    for case in 0..40 {
        let n = r.random_range(8..=50);
        let p = r.random_range(1..=5);
        let mut x = random_matrix(&mut r, n, p);
        if case % 2 == 0 {
            // integer features create repeated values
            for v in 0..n * p {
                let (i, j) = (v / p, v % p);
                x.set(i, j, x.get(i, j).round());
            }
        }
        let yr: Vec<f64> = (0..n).map(|i| x.get(i, 0) * 3.0 + r.random_range(-2.0..2.0)).collect();
        let yc: Vec<f64> = (0..n).map(|i| f64::from(x.get(i, p - 1) + r.random_range(-1.0..1.0) > 0.0)).collect();
        for (y, task, crit, imp) in [
            (&yr, Task::Regression, Criterion::SquaredError, sse as fn(&[f64]) -> f64),
            (&yc, Task::Binary, Criterion::Gini, gini_weighted as fn(&[f64]) -> f64),
        ] {
            let want = exhaustive(&x, y, imp);
            if !want.is_finite() || want >= imp(y) - 1e-9 {
                continue;
            }
            let tree = fit_cart(&x, y, task, &stump(crit), 0).map_err(|e| e.to_string())?;
            match root_impurity(&tree, &x, y, imp) {
                Some(got) if (got - want).abs() <= 1e-9 * (1.0 + want) => {}
                got => problems.push(format!("case {case} {task}: root impurity {got:?}, exhaustive {want}")),
            }
        }
    }

    let x = random_matrix(&mut r, 120, 4);
    let yr: Vec<f64> = (0..120).map(|i| (x.get(i, 0) * 2.0).sin() * 10.0 + x.get(i, 1)).collect();
    let yb: Vec<f64> = (0..120).map(|i| if x.get(i, 0) + x.get(i, 2) > 0.0 { 25.0 } else { 0.0 }).collect();
    let yt: Vec<f64> = (0..120).map(|i| 20.0 * (x.get(i, 1) + 2.0)).collect();
    let mut stages = 0;
    for (y, task) in [(&yr, Task::Regression), (&yb, Task::Binary), (&yt, Task::Ternary)] {
        for variant in [BoostVariant::GradientBoosting, BoostVariant::SecondOrder] {
            let mut params = BoostParams::defaults(variant);
            params.n_estimators = 40;
            params.tree.max_depth = Some(2);
            let targets: Vec<f64> = y.iter().map(|&v| task.target(v)).collect();
            let e = fit_gbdt(&x, &targets, task, &params, 1).map_err(|e| e.to_string())?;
            stages += e.loss_trace.len() - 1;
            if e.loss_trace.windows(2).any(|w| w[1] > w[0] + 1e-12) {
                problems.push(format!("{variant:?} {task}: training loss rose"));
            }
        }
    }

    let flat = Matrix::new(30, 2, vec![1.0; 60]).unwrap();
    let yf: Vec<f64> = (0..30).map(|_| r.random_range(0.0..80.0)).collect();
    let mean = yf.iter().sum::<f64>() / 30.0;
    let one = fit_gbdt(&flat, &yf, Task::Regression, &gb_params(1, 3, 1.0), 0).map_err(|e| e.to_string())?;
    let pred = match one.predict(&flat) {
        Output::Regression(p) => p,
        _ => unreachable!(),
    };
    if one.trees.iter().any(|t| t.n_leaves() != 1) || pred.iter().any(|p| (p - mean).abs() > 1e-12 * mean) {
        problems.push(format!("single-leaf stage predicts {} for mean {mean}", pred[0]));
    }

    let ds = toy_dataset(&mut rng(70), 300);
    let names: Vec<String> = ds.names.clone();
    let params = Params::new()
        .with("n_estimators", ParamValue::Int(30))
        .with("max_depth", ParamValue::Int(3))
        .with("subsample", ParamValue::Float(0.7));
    let rf = Params::new().with("n_estimators", ParamValue::Int(20)).with("max_features", ParamValue::Text("sqrt".into()));
    let mut identical = 0;
    for (kind, p) in [(ModelKind::Gb, &params), (ModelKind::Rf, &rf), (ModelKind::Xgb, &params)] {
        let bytes = |seed| -> Result<Vec<u8>, String> {
            let m = fit_model(&ds, &names, Task::Ternary, kind, p, seed, None).map_err(|e| e.to_string())?;
            let mut out = Vec::new();
            m.write(&mut out).map_err(|e| e.to_string())?;
            Ok(out)
        };
        let (a, b) = (bytes(9)?, bytes(9)?);
        if a == b {
            identical += 1;
        } else {
            problems.push(format!("{kind} differs between same-seed fits"));
        }
        let back = TrainedModel::read(&a[..]).map_err(|e| e.to_string())?;
        let mut again = Vec::new();
        back.write(&mut again).map_err(|e| e.to_string())?;
        if again != a {
            problems.push(format!("{kind} does not round-trip"));
        }
    }
    check(
        problems.is_empty(),
        if problems.is_empty() {
            format!(
                "stumps match exhaustive search; {stages} boosting stages never raised the loss; single leaf = mean; \
                 {identical} model kinds bit-identical across same-seed fits"
            )
        } else {
            problems.join("; ")
        },
    )
}

/// A dataset whose target depends on its first two columns.
fn toy_dataset(r: &mut ChaCha8Rng, n: usize) -> Dataset {
    let names: Vec<String> = ["a", "b", "c", "d"].map(String::from).to_vec();
    let rows = (0..n)
        .map(|i| {
            let v: Vec<f64> = (0..4).map(|_| r.random_range(-1.0..1.0)).collect();
            let kind = if i % 3 == 0 { EventKind::Deployment } else { EventKind::Set };
            let y = if kind == EventKind::Deployment {
                0.0
            } else {
                (25.0 + 30.0 * v[0] + 10.0 * v[1]).max(1.0)
            };
            Row {
                event_id: format!("E{i:06}"),
                kind,
                y,
                split: None,
                values: v.into_iter().map(Some).collect(),
            }
        })
        .collect();
    Dataset { w: 0, names, rows }
}

// ---------------------------------------------------------------- trends

struct SeedTrends {
    f1_w24: f64,
    f1_w72: f64,
    f1_echo: f64,
    /// (task, GB score, baseline score, GB better)
    vs_baseline: Vec<(Task, f64, f64, bool)>,
    mae_set: f64,
    mae_deploy: f64,
    high_pred: f64,
    high_obs: f64,
}

fn gb(n: usize) -> Params {
    Params::new()
        .with("n_estimators", ParamValue::Int(n as i64))
        .with("max_depth", ParamValue::Int(3))
        .with("learning_rate", ParamValue::Float(0.1))
}

fn fit_and_score(ds: &Dataset, level: Level, task: Task, kind: ModelKind, seed: u64) -> Result<(TrainedModel, f64), String> {
    let train = ds.split_rows(Split::Train);
    let test = ds.split_rows(Split::Test);
    let names = ds.level_names(level);
    let medians = Medians::fit(&ds.names, train.rows.iter().map(|r| &r.values[..]));
    let params = if kind == ModelKind::Gb { gb(100) } else { Params::new() };
    let model = fit_model(&train, &names, task, kind, &params, seed, Some(&medians)).map_err(|e| e.to_string())?;
    let y: Vec<f64> = test.rows.iter().map(|r| task.target(r.y)).collect();
    let out = model.predict(&test).map_err(|e| e.to_string())?;
    let metric = if task.is_classification() { Metric::F1 } else { Metric::Mae };
    let score = metric.score(&out, &y).map_err(|e| e.to_string())?;
    Ok((model, score))
}

fn trends_for(seed: u64) -> Result<SeedTrends, String> {
    let cfg = SynthConfig {
        seed,
        n_buoys: 800,
        days: 60,
        ..SynthConfig::default()
    };
    let world = generate(&cfg).map_err(|e| e.to_string())?;
    let dataset = |w| -> Result<Dataset, String> {
        let (ex, _) = build_dataset(&world.events, &world.records, &world.ocean, &world.bathy, w).map_err(|e| e.to_string())?;
        let ds = Dataset::from_examples(&ex, w).map_err(|e| e.to_string())?;
        assign_split(&ds, 0.25, seed).map_err(|e| e.to_string())
    };
    let d24 = dataset(24)?;
    let d72 = dataset(72)?;

    let f1_w24 = fit_and_score(&d24, Level::All, Task::Binary, ModelKind::Gb, seed)?.1;
    let f1_w72 = fit_and_score(&d72, Level::All, Task::Binary, ModelKind::Gb, seed)?.1;
    let f1_echo = fit_and_score(&d72, Level::Echo, Task::Binary, ModelKind::Gb, seed)?.1;

    let mut vs_baseline = Vec::new();
    let mut reg_model = None;
    for task in [Task::Binary, Task::Ternary, Task::Regression, Task::RegressionThreshold] {
        let (model, g) = if task == Task::Binary {
            (None, f1_w72)
        } else {
            let (m, s) = fit_and_score(&d72, Level::All, task, ModelKind::Gb, seed)?;
            (Some(m), s)
        };
        let b = fit_and_score(&d72, Level::All, task, ModelKind::Baseline, seed)?.1;
        let better = if task.is_classification() { g > b } else { g < b };
        vs_baseline.push((task, g, b, better));
        if task == Task::Regression {
            reg_model = model;
        }
    }

    let model = reg_model.expect("regression model fitted");
    let test = d72.split_rows(Split::Test);
    let pred = model.predict(&test).map_err(|e| e.to_string())?.point();
    let subset_mae = |kind| {
        let (p, o): (Vec<f64>, Vec<f64>) = test
            .rows
            .iter()
            .zip(&pred)
            .filter(|(r, _)| r.kind == kind)
            .map(|(r, p)| (*p, r.y))
            .unzip();
        mae(&p, &o).unwrap_or(f64::NAN)
    };
    let high: Vec<(f64, f64)> = test.rows.iter().zip(&pred).filter(|(r, _)| r.y >= 30.0).map(|(r, p)| (*p, r.y)).collect();
    let n_high = high.len().max(1) as f64;
    Ok(SeedTrends {
        f1_w24,
        f1_w72,
        f1_echo,
        vs_baseline,
        mae_set: subset_mae(EventKind::Set),
        mae_deploy: subset_mae(EventKind::Deployment),
        high_pred: high.iter().map(|h| h.0).sum::<f64>() / n_high,
        high_obs: high.iter().map(|h| h.1).sum::<f64>() / n_high,
    })
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let seeds = [101u64, 102, 103, 104, 105];
    let mut votes = [0usize; 5];
    for &seed in &seeds {
        let t = trends_for(seed)?;
        let cmp: Vec<String> = t
            .vs_baseline
            .iter()
            .map(|(task, g, b, _)| format!("{}:{g:.3}/{b:.3}", task.as_str()))
            .collect();
        println!(
            "      seed {seed}: F1 W24 {:.3} W72 {:.3} echo {:.3}; GB/baseline {}; MAE set {:.2} deploy {:.2}; \
             y>=30 predicted {:.1} observed {:.1}",
            t.f1_w24,
            t.f1_w72,
            t.f1_echo,
            cmp.join(" "),
            t.mae_set,
            t.mae_deploy,
            t.high_pred,
            t.high_obs
        );
        let holds = [
            t.f1_w72 >= t.f1_w24,
            t.f1_w72 >= t.f1_echo,
            t.vs_baseline.iter().all(|v| v.3),
            t.mae_deploy < t.mae_set,
            t.high_pred < t.high_obs,
        ];
        for (v, h) in votes.iter_mut().zip(holds) {
            *v += usize::from(h);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let majority = seeds.len() / 2 + 1;
    let tally: Vec<String> = ["a", "b", "c", "d", "e"]
        .iter()
        .zip(votes)
        .map(|(l, v)| format!("({l}) {v}/{}", seeds.len()))
        .collect();
    check(
        votes.iter().all(|&v| v >= majority) && secs < 600.0,
        format!("{}; {secs:.0} s", tally.join(", ")),
    )
}

// ---------------------------------------------------------------- split

fn kinds_dataset(n: usize, set_share: f64, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let rows = (0..n)
        .map(|i| Row {
            event_id: format!("E{i:06}"),
            kind: if r.random::<f64>() < set_share { EventKind::Set } else { EventKind::Deployment },
            y: 0.0,
            split: None,
            values: Vec::new(),
        })
        .collect();
    Dataset {
        w: 0,
        names: Vec::new(),
        rows,
    }
}

fn criterion_9() -> Outcome {
    let mut worst: f64 = 0.0;
    for (seed, share) in [(1u64, 0.5), (2, 0.3), (3, 0.72), (4, 0.9), (5, 0.15)] {
        let ds = kinds_dataset(12_203, share, seed);
        let (train, test) = stratified_split(&ds, 0.25, seed).map_err(|e| e.to_string())?;
        if (train.len(), test.len()) != (9152, 3051) {
            return Err(format!("split {} / {} instead of 9152 / 3051", train.len(), test.len()));
        }
        let share_of = |idx: &[usize]| {
            idx.iter().filter(|&&i| ds.rows[i].kind == EventKind::Set).count() as f64 / idx.len() as f64
        };
        let overall = share_of(&(0..ds.len()).collect::<Vec<_>>());
        worst = worst.max((share_of(&test) - overall).abs()).max((share_of(&train) - overall).abs());
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        if all != (0..ds.len()).collect::<Vec<_>>() {
            return Err("split does not partition the rows".into());
        }
    }
    check(
        worst <= 0.01,
        format!("5 datasets of 12203 rows split 9152 / 3051; worst class share deviation {:.4}%", worst * 100.0),
    )
}

// ---------------------------------------------------------------- importance

fn criterion_10() -> Outcome {
    let cfg = SynthConfig {
        n_buoys: 150,
        days: 40,
        ..SynthConfig::default()
    };
    let mut firsts = 0;
    let mut constant_scores = Vec::new();
    let seeds = [11u64, 12, 13, 14, 15];
    for &seed in &seeds {
        let world = generate(&SynthConfig { seed, ..cfg.clone() }).map_err(|e| e.to_string())?;
        let (ex, _) = build_dataset(&world.events, &world.records, &world.ocean, &world.bathy, 24).map_err(|e| e.to_string())?;
        let mut ds = Dataset::from_examples(&ex, 24).map_err(|e| e.to_string())?;
        ds.names.push("LabelCopy".into());
        ds.names.push("Constant".into());
        for row in &mut ds.rows {
            row.values.push(Some(row.y));
            row.values.push(Some(4.2));
        }
        let ds = assign_split(&ds, 0.25, seed).map_err(|e| e.to_string())?;
        let train = ds.split_rows(Split::Train);
        let mut names = ds.level_names(Level::All);
        names.push("LabelCopy".into());
        names.push("Constant".into());
        let params = gb(30);
        let model = fit_model(&train, &names, Task::Binary, ModelKind::Gb, &params, seed, None).map_err(|e| e.to_string())?;
        let table = permutation_importance(&model, &train, Metric::Auc, 5, seed).map_err(|e| e.to_string())?;
        if table.rank_of("LabelCopy") == Some(1) {
            firsts += 1;
        }
        constant_scores.extend(table.entries.iter().filter(|e| e.feature == "Constant").map(|e| (e.mean, e.std)));
        if !matches!(model.body, ModelBody::Ensemble(_)) {
            return Err("expected a tree ensemble".into());
        }
    }
    let constants_zero = constant_scores.iter().all(|&(m, s)| m == 0.0 && s == 0.0);
    check(
        firsts >= 4 && constants_zero && constant_scores.len() == seeds.len(),
        format!(
            "label copy ranked first in {firsts}/{} seeds; constant column scores {:?}",
            seeds.len(),
            constant_scores.iter().map(|c| c.0).collect::<Vec<_>>()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("solar oracle", criterion_1),
        ("geometry oracle", criterion_2),
        ("pipeline on synth", criterion_3),
        ("aggregation oracle", criterion_4),
        ("metrics", criterion_5),
        ("linear models", criterion_6),
        ("trees and boosting", criterion_7),
        ("trend reproduction", criterion_8),
        ("split fidelity", criterion_9),
        ("permutation importance", criterion_10),
    ];
    let only: Option<usize> = std::env::var("TUNAI_CRITERION").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {n:>2} {name}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {n:>2} {name}: {detail} [{secs:.1} s]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
