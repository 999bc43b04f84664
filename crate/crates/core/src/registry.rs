//! Named functionals, payoffs, and nonlinearities for the CLI and the C
//! interface. Parametrized entries use `name:arg1,arg2` syntax.

use crate::error::{PpdeError, Result};
use crate::expectation::Payoff;
use crate::pathspace::{Path, SpaceTimePoint};
use crate::viscosity::GFunction;

/// Boxed functional of space-time points.
pub type NamedFunctional = Box<dyn Fn(&SpaceTimePoint) -> f64 + Sync + Send>;
/// Boxed terminal functional of whole paths.
pub type NamedTerminal = Box<dyn Fn(&Path) -> f64 + Sync + Send>;

fn split_args(spec: &str) -> (String, Vec<f64>) {
    match spec.split_once(':') {
        None => (spec.trim().to_string(), Vec::new()),
        Some((name, rest)) => {
            let args = rest
                .split(',')
                .filter_map(|s| s.trim().parse::<f64>().ok())
                .collect();
            (name.trim().to_string(), args)
        }
    }
}

/// A functional of space-time points by name. `t_horizon` feeds the
/// terminal-anchored entries.
pub fn functional_by_name(spec: &str, t_horizon: f64) -> Result<NamedFunctional> {
    let (name, args) = split_args(spec);
    let need = |k: usize| -> Result<()> {
        if args.len() < k {
            Err(PpdeError::InvalidInput(format!("functional '{name}' needs {k} argument(s)")))
        } else {
            Ok(())
        }
    };
    Ok(match name.as_str() {
        "const" => {
            need(1)?;
            let c = args[0];
            Box::new(move |_| c)
        }
        "time" => Box::new(|theta: &SpaceTimePoint| theta.time()),
        "value" => Box::new(|theta: &SpaceTimePoint| theta.value()[0]),
        "neg-value" => Box::new(|theta: &SpaceTimePoint| -theta.value()[0]),
        "value-sq" => {
            Box::new(|theta: &SpaceTimePoint| theta.value().iter().map(|x| x * x).sum())
        }
        "heat-ref" => Box::new(move |theta: &SpaceTimePoint| {
            let sq: f64 = theta.value().iter().map(|x| x * x).sum();
            sq + (t_horizon - theta.time())
        }),
        "heat-ref-plus" => {
            need(1)?;
            let k = args[0];
            Box::new(move |theta: &SpaceTimePoint| {
                let sq: f64 = theta.value().iter().map(|x| x * x).sum();
                sq + (1.0 + k) * (t_horizon - theta.time())
            })
        }
        "heat-ref-shift" => {
            need(1)?;
            let c = args[0];
            Box::new(move |theta: &SpaceTimePoint| {
                let sq: f64 = theta.value().iter().map(|x| x * x).sum();
                sq + (t_horizon - theta.time()) + c
            })
        }
        "affine" => {
            need(2)?;
            let (a, b) = (args[0], args[1]);
            Box::new(move |theta: &SpaceTimePoint| a * theta.value()[0] + b * theta.time())
        }
        "runmax" => Box::new(|theta: &SpaceTimePoint| {
            (0..=theta.t_index).map(|s| theta.path.at(s)[0]).fold(f64::MIN, f64::max)
        }),
        other => {
            return Err(PpdeError::InvalidInput(format!(
                "unknown functional '{other}' (try const:<c>, time, value, neg-value, value-sq, heat-ref, heat-ref-plus:<k>, heat-ref-shift:<c>, affine:<a>,<b>, runmax)"
            )))
        }
    })
}

/// The same registry exposed as a stop-indexed payoff, optionally
/// localized at `delta`.
pub fn payoff_by_name(spec: &str, t_horizon: f64, delta: Option<f64>) -> Result<Payoff> {
    let f = functional_by_name(spec, t_horizon)?;
    let eval = move |s: usize, path: &Path| {
        let t = s.min(path.n_steps());
        f(&SpaceTimePoint { t_index: t, path: path.clone() })
    };
    Ok(match delta {
        None => Payoff::new(eval),
        Some(d) => Payoff::clipped(eval, d),
    })
}

/// Terminal functionals of whole paths.
pub fn terminal_by_name(spec: &str) -> Result<NamedTerminal> {
    let (name, args) = split_args(spec);
    Ok(match name.as_str() {
        "value" => Box::new(|p: &Path| p.at(p.n_steps())[0]),
        "value-sq" => Box::new(|p: &Path| p.at(p.n_steps()).iter().map(|x| x * x).sum()),
        "runmax" => {
            Box::new(|p: &Path| (0..=p.n_steps()).map(|s| p.at(s)[0]).fold(f64::MIN, f64::max))
        }
        "const" => {
            if args.is_empty() {
                return Err(PpdeError::InvalidInput("const needs an argument".into()));
            }
            let c = args[0];
            Box::new(move |_| c)
        }
        other => {
            return Err(PpdeError::InvalidInput(format!(
                "unknown terminal functional '{other}' (try value, value-sq, runmax, const:<c>)"
            )))
        }
    })
}

/// Nonlinearities by name; `l_bound` feeds the extremal operator.
pub fn g_by_name(spec: &str, l_bound: f64) -> Result<GFunction> {
    let (name, args) = split_args(spec);
    Ok(match name.as_str() {
        "zero" => GFunction::zero(),
        "heat" => GFunction::heat(if args.is_empty() { 1.0 } else { args[0] }),
        "heat-state" => {
            if args.len() < 2 {
                return Err(PpdeError::InvalidInput("heat-state needs rate,eps".into()));
            }
            GFunction::heat_with_state(args[0], args[1])
        }
        "pucci" => {
            if args.len() < 3 {
                return Err(PpdeError::InvalidInput("pucci needs alpha,beta,gamma".into()));
            }
            let jet = crate::pathspace::Jet::scalar(args[0], args[1], args[2]);
            crate::viscosity::pucci_operator_g(&jet, l_bound)
        }
        other => {
            return Err(PpdeError::InvalidInput(format!(
                "unknown nonlinearity '{other}' (try zero, heat, heat:<c>, heat-state:<c>,<eps>, pucci:<a>,<b>,<c>)"
            )))
        }
    })
}
