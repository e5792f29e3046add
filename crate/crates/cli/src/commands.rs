use std::path::Path;
use std::time::Instant;

use cexp_core::bounds::{self, thresholds, ConcentrationVariant};
use cexp_core::format;
use cexp_core::loschmidt::{self, log_echo_series, multi_echo_series, LogEchoOptions};
use cexp_core::obs_dynamics::{self, observable_series, CoefficientSource, ObservableOptions};
use cexp_core::oracle::{self, DenseSystem};
use cexp_core::{Complex64, Error, Estimate, InteractionGraph, LocalHamiltonian, MultiEchoSpec, ProductState};
use serde_json::{json, Map, Value};

use crate::args::*;
use crate::Failure;

/// Largest order tried when an order is derived from `--epsilon`.
const MAX_AUTO_ORDER: usize = 64;

pub fn run(command: &Command) -> Result<Value, Failure> {
    let start = Instant::now();
    let mut out = match command {
        Command::Observable(a) => observable(a)?,
        Command::Loschmidt(a) => loschmidt_cmd(a)?,
        Command::MultiLoschmidt(a) => multi(a)?,
        Command::Exact(a) => exact(a)?,
        Command::Concentration(a) => concentration(a)?,
        Command::Qsl(a) => qsl(a)?,
        Command::Thresholds(a) => thresholds_cmd(a)?,
        Command::DptScan(a) => dpt_scan(a)?,
    };
    if command.common().timing {
        out.insert("wall_time_s".into(), json!(start.elapsed().as_secs_f64()));
    }
    Ok(Value::Object(out))
}

fn complex(z: Complex64) -> Value {
    json!({"re": z.re, "im": z.im})
}

/// Non-finite floats become `null`.
fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn header(command: &str) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("schema".into(), json!(1));
    m.insert("command".into(), json!(command));
    m
}

fn ham(path: &Path) -> Result<LocalHamiltonian, Failure> {
    Ok(format::load_hamiltonian(path)?)
}

fn state(path: &Path) -> Result<ProductState, Failure> {
    Ok(format::load_state(path)?)
}

fn finite(name: &str, x: f64) -> Result<f64, Failure> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Failure::usage(format!("--{name} must be finite")))
    }
}

/// Parses `a`, `bi`, `a+bi` or `a-bi`.
pub fn parse_time(text: &str) -> Result<Complex64, Failure> {
    let bad = || Failure::usage(format!("cannot parse time {text:?}"));
    let s = text.trim();
    let z = if let Some(body) = s.strip_suffix('i') {
        let split = body
            .char_indices()
            .skip(1)
            .filter(|&(i, c)| (c == '+' || c == '-') && !matches!(body.as_bytes()[i - 1], b'e' | b'E'))
            .map(|(i, _)| i)
            .last();
        match split {
            Some(i) => {
                let re: f64 = body[..i].parse().map_err(|_| bad())?;
                let im = imag_part(&body[i..]).ok_or_else(bad)?;
                Complex64::new(re, im)
            }
            None => Complex64::new(0.0, imag_part(body).ok_or_else(bad)?),
        }
    } else {
        Complex64::new(s.parse().map_err(|_| bad())?, 0.0)
    };
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(bad())
    }
}

fn imag_part(s: &str) -> Option<f64> {
    match s {
        "" | "+" => Some(1.0),
        "-" => Some(-1.0),
        _ => s.parse().ok(),
    }
}

enum Truncation {
    Order(usize),
    Epsilon(f64),
}

fn truncation(order: Option<usize>, epsilon: Option<f64>) -> Result<Truncation, Failure> {
    match (order, epsilon) {
        (Some(m), None) => Ok(Truncation::Order(m)),
        (None, Some(e)) if e > 0.0 && e.is_finite() => Ok(Truncation::Epsilon(e)),
        (None, Some(e)) => Err(Error::EpsilonNonpositive(e).into()),
        _ => Err(Failure::usage("give exactly one of --order and --epsilon")),
    }
}

/// Smallest order whose bound is at most `epsilon`.
fn order_for(epsilon: f64, bound: impl Fn(usize) -> cexp_core::Result<f64>) -> Result<usize, Failure> {
    for m in 0..=MAX_AUTO_ORDER {
        if bound(m)? <= epsilon {
            return Ok(m);
        }
    }
    Err(Error::SizeCap {
        size: MAX_AUTO_ORDER + 1,
        cap: MAX_AUTO_ORDER,
    }
    .into())
}

/// Adds the certificate fields, or fails with `OutsideRadius` unless forced.
fn certify(out: &mut Map<String, Value>, est: &Estimate, ratio: f64, force: bool) -> Result<(), Failure> {
    if !est.within_radius && !force {
        return Err(Error::OutsideRadius { ratio }.into());
    }
    out.insert("value".into(), complex(est.value));
    out.insert("order".into(), json!(est.order));
    out.insert("truncation_bound".into(), num(est.truncation_bound));
    out.insert("within_radius".into(), json!(est.within_radius));
    out.insert("certified".into(), json!(est.within_radius));
    Ok(())
}

fn observable(a: &ObservableArgs) -> Result<Map<String, Value>, Failure> {
    let h = ham(&a.ham)?;
    let s = state(&a.state)?;
    let obs = format::load_observable(&a.obs, h.d())?;
    let t = finite("time", a.time)?;
    let source = match a.source {
        Source::Clusters => CoefficientSource::Clusters,
        Source::LightCone => CoefficientSource::LightCone,
        Source::Auto => CoefficientSource::Auto,
    };
    let options = ObservableOptions {
        source,
        ..Default::default()
    };
    let setup = obs_dynamics::ObservableSetup::new(&h, &obs, &s)?;
    let degree = setup.graph().max_degree();
    let th = setup.thresholds();
    drop(setup);
    let mut out = header("observable");
    out.insert("time".into(), json!(t));
    out.insert("t_star".into(), json!(th.t_star));
    out.insert("max_degree".into(), json!(degree));
    match a.mode {
        Mode::Short => {
            out.insert("mode".into(), json!("short"));
            let order = match truncation(a.order, a.epsilon)? {
                Truncation::Order(m) => m,
                Truncation::Epsilon(e) => {
                    order_for(e, |m| bounds::obs_truncation_bound(m, t, degree, obs.norm()))?
                }
            };
            let series = observable_series(&h, &obs, &s, order, &options)?;
            let est = series.estimate(t, order);
            certify(&mut out, &est, t.abs() / th.t_star, a.common.force)?;
            out.insert("source".into(), json!(series.source.name()));
            out.insert("clusters_per_order".into(), json!(series.clusters_per_order));
            out.insert("max_term_ratio".into(), json!(series.max_term_ratio));
        }
        Mode::Continued => {
            out.insert("mode".into(), json!("continued"));
            let epsilon = match truncation(a.order, a.epsilon)? {
                Truncation::Epsilon(e) => e,
                Truncation::Order(_) => return Err(Failure::usage("--mode continued takes --epsilon, not --order")),
            };
            let c = obs_dynamics::continue_observable_with(&h, &obs, &s, t, epsilon, &options)?;
            out.insert("value".into(), complex(c.estimate.value));
            out.insert("order".into(), json!(c.plan.order));
            out.insert("truncation_bound".into(), num(c.estimate.truncation_bound));
            out.insert("within_radius".into(), json!(true));
            out.insert("certified".into(), json!(true));
            out.insert("epsilon".into(), json!(epsilon));
            out.insert(
                "plan".into(),
                json!({"eta": c.plan.eta, "r_prime": num(c.plan.r_prime), "w": num(c.plan.w)}),
            );
            out.insert("source".into(), json!(c.source.name()));
        }
    }
    Ok(out)
}

fn loschmidt_cmd(a: &LoschmidtArgs) -> Result<Map<String, Value>, Failure> {
    let h = ham(&a.ham)?;
    let s = state(&a.state)?;
    let x = finite("time", a.time)?;
    let t = if a.imaginary {
        Complex64::new(0.0, x)
    } else {
        Complex64::new(x, 0.0)
    };
    let degree = InteractionGraph::build(&h).max_degree();
    let th = thresholds(degree);
    let order = match truncation(a.order, a.epsilon)? {
        Truncation::Order(m) => m,
        Truncation::Epsilon(e) => order_for(e, |m| bounds::loschmidt_truncation_bound(m, x, degree, h.len()))?,
    };
    let series = log_echo_series(&h, &s, order, &LogEchoOptions::default())?;
    let est = series.estimate(t, order);
    let mut out = header("loschmidt");
    out.insert("time".into(), complex(t));
    out.insert("t_star_L".into(), json!(th.t_star_l));
    out.insert("max_degree".into(), json!(degree));
    out.insert("n_terms".into(), json!(h.len()));
    certify(&mut out, &est, t.norm() / th.t_star_l, a.common.force)?;
    echo_fields(&mut out, &est);
    out.insert("clusters_per_order".into(), json!(series.clusters_per_order));
    out.insert("max_term_ratio".into(), json!(series.max_term_ratio));
    Ok(out)
}

/// `L = e^{value}` and the interval `e^{∓ε}|e^{value}|` that contains `|L|`.
fn echo_fields(out: &mut Map<String, Value>, est: &Estimate) {
    let echo = est.value.exp();
    out.insert("echo".into(), complex(echo));
    let window = if est.within_radius {
        let m = echo.norm();
        let e = est.truncation_bound;
        json!([num((-e).exp() * m), num(e.exp() * m)])
    } else {
        Value::Null
    };
    out.insert("echo_modulus_bounds".into(), window);
}

fn multi(a: &MultiArgs) -> Result<Map<String, Value>, Failure> {
    if a.ham.len() != a.time.len() {
        return Err(Failure::usage("--ham and --time must be given the same number of times"));
    }
    let hs = a.ham.iter().map(|p| ham(p)).collect::<Result<Vec<_>, _>>()?;
    let times = a.time.iter().map(|t| parse_time(t)).collect::<Result<Vec<_>, _>>()?;
    let spec = MultiEchoSpec::new(hs, times.clone())?;
    let s = state(&a.state)?;
    let order = match truncation(a.order, a.epsilon)? {
        Truncation::Order(m) => m,
        Truncation::Epsilon(e) => {
            let base = multi_echo_series(&spec, &s, 0, &LogEchoOptions::default())?;
            order_for(e, |m| bounds::multi_truncation_bound(m, base.tau, base.n_terms))?
        }
    };
    let series = multi_echo_series(&spec, &s, order, &LogEchoOptions::default())?;
    let est = series.estimate();
    let mut out = header("multi-loschmidt");
    out.insert("times".into(), Value::Array(times.iter().map(|&t| complex(t)).collect()));
    out.insert("k".into(), json!(spec.k()));
    out.insert("tau".into(), json!(series.tau));
    out.insert("t_star_L".into(), json!(series.thresholds.t_star_l));
    out.insert("max_degree".into(), json!(series.max_degree));
    out.insert("labeled_degree".into(), json!(series.labeled_degree));
    out.insert("n_terms".into(), json!(series.n_terms));
    certify(&mut out, &est, series.tau, a.common.force)?;
    echo_fields(&mut out, &est);
    out.insert("clusters_per_order".into(), json!(series.clusters_per_order));
    out.insert("max_term_ratio".into(), json!(series.max_term_ratio));
    Ok(out)
}

fn exact(a: &ExactArgs) -> Result<Map<String, Value>, Failure> {
    let hs = a.ham.iter().map(|p| ham(p)).collect::<Result<Vec<_>, _>>()?;
    let s = state(&a.state)?;
    let mut out = header("exact");
    match a.what {
        What::Observable => {
            out.insert("what".into(), json!("observable"));
            let [h] = hs.as_slice() else {
                return Err(Failure::usage("exact observable takes one --ham"));
            };
            let obs_path = a.obs.as_ref().ok_or_else(|| Failure::usage("--obs is required"))?;
            let obs = format::load_observable(obs_path, h.d())?;
            let [t] = a.time.as_slice() else {
                return Err(Failure::usage("exact observable takes one --time"));
            };
            let t = parse_time(t)?;
            if t.im != 0.0 || a.imaginary {
                return Err(Failure::usage("observable times must be real"));
            }
            out.insert("time".into(), json!(t.re));
            out.insert("value".into(), complex(oracle::exact_observable(h, &obs, &s, t.re)?));
        }
        What::Loschmidt => {
            out.insert("what".into(), json!("loschmidt"));
            let mut times = a.time.iter().map(|t| parse_time(t)).collect::<Result<Vec<_>, _>>()?;
            if a.imaginary {
                times.iter_mut().for_each(|t| *t *= Complex64::new(0.0, 1.0));
            }
            if times.len() != hs.len() {
                return Err(Failure::usage("--ham and --time must be given the same number of times"));
            }
            out.insert("times".into(), Value::Array(times.iter().map(|&t| complex(t)).collect()));
            let spec = MultiEchoSpec::new(hs, times)?;
            let echo = oracle::exact_loschmidt(&spec, &s)?;
            out.insert("echo".into(), complex(echo));
            out.insert("value".into(), complex(echo.ln()));
        }
        What::Distribution => {
            out.insert("what".into(), json!("distribution"));
            let [h] = hs.as_slice() else {
                return Err(Failure::usage("exact distribution takes one --ham"));
            };
            let rho = match a.time.as_slice() {
                [] => s.dense(),
                [t] => {
                    let t = parse_time(t)?;
                    if t.im != 0.0 {
                        return Err(Failure::usage("evolution time must be real"));
                    }
                    out.insert("time".into(), json!(t.re));
                    DenseSystem::new(h)?.evolved_density(&s, t.re)?
                }
                _ => return Err(Failure::usage("exact distribution takes at most one --time")),
            };
            let dist = oracle::exact_measurement_distribution(h, &rho)?;
            let mean: f64 = dist.iter().map(|(x, p)| x * p).sum();
            out.insert("mean".into(), json!(mean));
            out.insert(
                "outcomes".into(),
                Value::Array(dist.iter().map(|&(x, p)| json!({"energy": x, "probability": p})).collect()),
            );
        }
    }
    Ok(out)
}

fn concentration(a: &ConcentrationArgs) -> Result<Map<String, Value>, Failure> {
    let h = ham(&a.ham)?;
    let degree = InteractionGraph::build(&h).max_degree();
    let variant = match a.variant {
        Variant::Product => ConcentrationVariant::Product,
        Variant::Evolved => ConcentrationVariant::Evolved,
    };
    let r = bounds::concentration_bound(finite("delta", a.delta)?, h.len(), degree, variant, finite("time", a.time)?)?;
    let mut out = header("concentration");
    out.insert("variant".into(), json!(r.variant.name()));
    out.insert("delta".into(), json!(r.delta));
    out.insert("time".into(), json!(r.t));
    out.insert("nu".into(), json!(r.nu));
    out.insert("bound".into(), json!(r.bound));
    out.insert("raw_bound".into(), json!(r.raw_bound));
    out.insert("clamped".into(), json!(r.clamped));
    out.insert("n_terms".into(), json!(r.n_terms));
    out.insert("max_degree".into(), json!(r.max_degree));
    Ok(out)
}

fn qsl(a: &QslArgs) -> Result<Map<String, Value>, Failure> {
    let h = ham(&a.ham)?;
    let s = state(&a.state)?;
    let t = finite("time", a.time)?;
    let degree = InteractionGraph::build(&h).max_degree();
    let r = bounds::qsl_report(&h, &s, t, degree)?;
    let mut out = header("qsl");
    out.insert("time".into(), json!(t));
    out.insert("lower_bound".into(), json!(r.lower_bound));
    out.insert("t_qsl_floor".into(), json!(r.t_qsl_floor));
    out.insert("mt_ml_bound".into(), num(r.mt_ml_bound));
    out.insert("mean_energy".into(), json!(r.mean_energy));
    out.insert("energy_variance".into(), json!(r.energy_variance));
    out.insert("n_terms".into(), json!(r.n_terms));
    out.insert("max_degree".into(), json!(r.max_degree));
    Ok(out)
}

fn thresholds_cmd(a: &ThresholdArgs) -> Result<Map<String, Value>, Failure> {
    let h = ham(&a.ham)?;
    let degree = InteractionGraph::build(&h).max_degree();
    let th = thresholds(degree);
    let mut out = header("thresholds");
    out.insert("t_star".into(), json!(th.t_star));
    out.insert("t_star_L".into(), json!(th.t_star_l));
    out.insert("max_degree".into(), json!(degree));
    out.insert("effective_degree".into(), json!(th.d_eff));
    out.insert("n_terms".into(), json!(h.len()));
    Ok(out)
}

fn dpt_scan(a: &DptArgs) -> Result<Map<String, Value>, Failure> {
    let h = ham(&a.ham)?;
    let s = state(&a.state)?;
    if a.points < 2 {
        return Err(Failure::usage("--points must be at least 2"));
    }
    let degree = InteractionGraph::build(&h).max_degree();
    let window = thresholds(degree).t_star_l;
    let t_max = finite("t-max", a.t_max.unwrap_or(window / 2.0))?.abs();
    if t_max >= window && !a.common.force {
        return Err(Error::OutsideRadius { ratio: t_max / window }.into());
    }
    let times: Vec<f64> = (0..a.points)
        .map(|k| t_max * k as f64 / (a.points - 1) as f64)
        .collect();
    let rates = loschmidt::per_site_rates(&h, &s, &times, a.order)?;
    let mut out = header("dpt-scan");
    out.insert("analytic_window".into(), json!(window));
    out.insert("order".into(), json!(a.order));
    out.insert("n".into(), json!(h.n()));
    out.insert("max_degree".into(), json!(degree));
    out.insert(
        "rates".into(),
        Value::Array(
            times
                .iter()
                .zip(&rates)
                .map(|(&t, r)| {
                    json!({
                        "time": t,
                        "rate": {"re": r.re, "im": r.im},
                        "truncation_bound": num(r.truncation_bound),
                        "certified": r.within_radius,
                    })
                })
                .collect(),
        ),
    );
    Ok(out)
}
