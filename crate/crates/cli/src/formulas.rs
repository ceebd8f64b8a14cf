//! Named closed forms for the `formulas` subcommand.

use num_rational::BigRational;
use serde::Serialize;

use shelf_lab::ratio::{format_ratio, to_f64};
use shelf_lab::theory::{self, ThirdMoment};
use shelf_lab::{kernel, ShuffleSpec};

use crate::{CliResult, Failure, SCHEMA_VERSION};

pub enum Value {
    Exact(BigRational),
    Real(f64),
}

#[derive(Serialize)]
pub struct FormulaJson<'a> {
    schema_version: u32,
    name: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    m: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<String>,
    decimal: f64,
}

impl Value {
    fn decimal(&self) -> f64 {
        match self {
            Value::Exact(r) => to_f64(r),
            Value::Real(x) => *x,
        }
    }

    pub fn to_text(&self) -> String {
        match self {
            Value::Exact(r) => format!("{}\n{}\n", format_ratio(r), to_f64(r)),
            Value::Real(x) => format!("{x}\n"),
        }
    }

    pub fn to_json<'a>(&self, name: &'a str, n: Option<u64>, m: Option<u32>) -> FormulaJson<'a> {
        FormulaJson {
            schema_version: SCHEMA_VERSION,
            name,
            n,
            m,
            exact: match self {
                Value::Exact(r) => Some(format_ratio(r)),
                Value::Real(_) => None,
            },
            decimal: self.decimal(),
        }
    }
}

/// (name, required arguments, description)
const FORMULAS: &[(&str, &str, &str)] = &[
    ("mean_inversions", "n", "E[inv] = n(n-1)/4"),
    ("var_a", "n m", "variance of the strict pair-order count A"),
    ("var_c", "n m", "variance of the equal-even-pair count C"),
    ("cov_printed", "n m", "Cov(A, C) as quoted"),
    ("cov_corrected", "n m", "Cov(A, C) with the sign corrected"),
    ("var_total_printed", "n m", "Var(inv) as quoted"),
    ("var_total_from_components", "n m", "Var(A) + Var(C) + 2 Cov(A, C), corrected"),
    ("unimodal_variance_claimed", "n", "quoted Var(inv) for m = 1"),
    ("zeta1_sq", "m", "variance of the kernel projection h1"),
    ("h1_third_abs_moment", "m", "E|h1|^3, exact"),
    ("descent_mean", "n", "E[des] = (n-1)/2"),
    ("descent_var_fdh", "n m", "(n+1)/12 + (n-2)/(6m^2)"),
    ("limit_var_descents_claimed", "m", "(m^2+2)/(3m^2)"),
    ("limit_var_descents_coupling", "", "1"),
    ("even_pile_probability", "m [--bias]", "probability a card lands on an even pile"),
    ("kd_bound_constant", "", "the uniform constant C"),
    ("kd_bound_threshold", "", "smallest n with C/sqrt(n) < 1"),
    ("uniform_kd_bound", "n", "C/sqrt(n)"),
    ("inversion_kd_bound", "n m", "two-term bound with the exact third moment"),
    ("slutsky_error", "n m", "(4m-1)/sqrt(n)"),
];

pub fn catalogue() -> String {
    let mut out = String::from("available formulas:\n");
    for (name, args, desc) in FORMULAS {
        out.push_str(&format!("  {name:<28} {args:<12} {desc}\n"));
    }
    out
}

fn need_n(n: Option<u64>, name: &str) -> CliResult<u64> {
    n.ok_or_else(|| Failure::usage(format!("{name} needs --n")))
}

fn need_m(m: Option<u32>, name: &str) -> CliResult<u32> {
    m.ok_or_else(|| Failure::usage(format!("{name} needs --m")))
}

pub fn evaluate(
    name: &str,
    n: Option<u64>,
    m: Option<u32>,
    biased: Option<&ShuffleSpec>,
) -> CliResult<Value> {
    use Value::{Exact, Real};
    let nm = || -> CliResult<(u64, u32)> { Ok((need_n(n, name)?, need_m(m, name)?)) };
    let value = match name {
        "mean_inversions" => Exact(theory::mean_inversions(need_n(n, name)?)),
        "var_a" => nm().map(|(n, m)| Exact(theory::var_pair_order(n, m)))?,
        "var_c" => nm().map(|(n, m)| Exact(theory::var_equal_even(n, m)))?,
        "cov_printed" => nm().map(|(n, m)| Exact(theory::cov_printed(n, m)))?,
        "cov_corrected" => nm().map(|(n, m)| Exact(theory::cov_corrected(n, m)))?,
        "var_total_printed" => nm().map(|(n, m)| Exact(theory::var_total_printed(n, m)))?,
        "var_total_from_components" => {
            nm().map(|(n, m)| Exact(theory::inversion_moments(n, m).var_total_from_components))?
        }
        "unimodal_variance_claimed" => {
            Exact(theory::unimodal_variance_claimed(need_n(n, name)?))
        }
        "zeta1_sq" => Exact(theory::zeta1_sq(need_m(m, name)?)),
        "h1_third_abs_moment" => Exact(kernel::h1_third_abs_moment_exact(need_m(m, name)?)),
        "descent_mean" => Exact(theory::descent_moments(need_n(n, name)?, 1).mean),
        "descent_var_fdh" => nm().map(|(n, m)| Exact(theory::descent_moments(n, m).var_fdh))?,
        "limit_var_descents_claimed" => {
            Exact(theory::limit_var_descents_claimed(need_m(m, name)?))
        }
        "limit_var_descents_coupling" => Exact(theory::limit_var_descents_coupling()),
        "even_pile_probability" => {
            let spec = match biased {
                Some(spec) => spec.clone(),
                None => ShuffleSpec::new(1, need_m(m, name)?)?,
            };
            Exact(theory::even_pile_probability(&spec))
        }
        "kd_bound_constant" => Real(theory::kd_bound_constant()),
        "kd_bound_threshold" => Exact(BigRational::from_integer(
            theory::kd_bound_nontrivial_threshold().into(),
        )),
        "uniform_kd_bound" => Real(theory::uniform_kd_bound(need_n(n, name)?)),
        "inversion_kd_bound" => {
            let (n, m) = nm()?;
            Real(theory::inversion_kd_bound(n, m, ThirdMoment::Exact)?)
        }
        "slutsky_error" => nm().map(|(n, m)| Real(theory::slutsky_error(n, m)))?,
        _ => {
            return Err(Failure::usage(format!(
                "unknown formula {name:?}\n{}",
                catalogue()
            )))
        }
    };
    Ok(value)
}
