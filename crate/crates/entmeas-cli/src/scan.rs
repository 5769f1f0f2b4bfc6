//! Parameter-scan grammar and parallel grid evaluation for the `scan`
//! subcommand.
//!
//! A scan is described by tokens after the family name: `param=lo..hi[:step]`
//! declares a swept axis, `step=x` supplies the step for axes without an
//! inline one, `param=value` pins a parameter, and a bare quantity name
//! requests a column group. Rows are evaluated in a worker pool and written
//! in row-major grid order (the first declared axis varies slowest), so
//! reruns with identical inputs produce byte-identical CSV.

use entmeas::concurrence::{mixed_lower_bound, BoundOptions};
use entmeas::measures::{
    physical_hierarchy, ppt_check, separability_measure, total_marginal_entropy, HierarchyMode,
    HierarchyOptions, MeasureKind,
};
use entmeas::states::{parse_number, StateSpec};
use entmeas::tensor::{MultiState, SubsystemSet};
use entmeas::Error;
use rayon::prelude::*;

use crate::CliFailure;

/// One requested column group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Entropy,
    Bound,
    SepMeasure,
    PhysMeasure,
    Ppt,
}

/// Canonical column order; the emitted schema depends only on which
/// quantities are requested, never on the order they were given in.
const QUANTITY_ORDER: [Quantity; 5] = [
    Quantity::Entropy,
    Quantity::Bound,
    Quantity::SepMeasure,
    Quantity::PhysMeasure,
    Quantity::Ppt,
];

impl Quantity {
    fn parse(token: &str) -> Option<Quantity> {
        match token {
            "entropy" => Some(Quantity::Entropy),
            "bound" => Some(Quantity::Bound),
            "sep-measure" | "sep" => Some(Quantity::SepMeasure),
            "phys-measure" | "phys" => Some(Quantity::PhysMeasure),
            "ppt" => Some(Quantity::Ppt),
            _ => None,
        }
    }

    fn columns(self) -> &'static [&'static str] {
        match self {
            Quantity::Entropy => &["e_total"],
            Quantity::Bound => &["bound"],
            Quantity::SepMeasure => &["sep_total", "sep_k"],
            Quantity::PhysMeasure => &["phys_pairs", "phys_top", "phys_total"],
            Quantity::Ppt => &["ppt_min_eig", "ppt_npt"],
        }
    }
}

/// One swept parameter axis with its resolved grid.
struct SweepAxis {
    name: String,
    lo: f64,
    step: f64,
    count: usize,
}

/// A fully validated scan: the parameter template, the grid axes, and the
/// requested quantities.
pub struct ScanSpec {
    template: StateSpec,
    sweeps: Vec<SweepAxis>,
    quantities: Vec<Quantity>,
}

/// Global knobs forwarded from the command line into every grid point.
pub struct ScanContext {
    pub eps: f64,
    pub mode: HierarchyMode,
    pub seed: u64,
    pub max_dim: usize,
}

struct RawSweep {
    name: String,
    lo: f64,
    hi: f64,
    step: Option<f64>,
}

impl ScanSpec {
    /// Parses and validates the scan tokens for a family.
    pub fn parse(family: &str, args: &[String]) -> Result<ScanSpec, CliFailure> {
        let mut fixed_tokens: Vec<String> = Vec::new();
        let mut raw_sweeps: Vec<RawSweep> = Vec::new();
        let mut default_step: Option<f64> = None;
        let mut quantities: Vec<Quantity> = Vec::new();

        for token in args {
            let t = token.trim();
            if let Some(quantity) = Quantity::parse(&t.to_ascii_lowercase()) {
                if quantities.contains(&quantity) {
                    return Err(CliFailure::new(format!("duplicate quantity `{t}`")));
                }
                quantities.push(quantity);
                continue;
            }
            let Some((name_raw, value)) = t.split_once('=') else {
                return Err(CliFailure::new(format!(
                    "unrecognized scan token `{t}`: expected a quantity (entropy, bound, \
                     sep-measure, phys-measure, ppt), `param=value`, `param=lo..hi[:step]`, \
                     or `step=x`"
                )));
            };
            let name = name_raw.trim().to_ascii_lowercase();
            if let Some((lo_text, rest)) = value.split_once("..") {
                if raw_sweeps.iter().any(|s| s.name == name) {
                    return Err(CliFailure::new(format!("duplicate sweep `{name}`")));
                }
                let (hi_text, step_text) = match rest.split_once(':') {
                    Some((hi, step)) => (hi, Some(step)),
                    None => (rest, None),
                };
                raw_sweeps.push(RawSweep {
                    name,
                    lo: parse_number(lo_text)?,
                    hi: parse_number(hi_text)?,
                    step: step_text.map(parse_number).transpose()?,
                });
            } else if name == "step" {
                if default_step.is_some() {
                    return Err(CliFailure::new("duplicate `step=` token".to_string()));
                }
                default_step = Some(parse_number(value)?);
            } else {
                fixed_tokens.push(t.to_string());
            }
        }

        if raw_sweeps.is_empty() {
            return Err(CliFailure::new(
                "scan needs at least one swept parameter (`param=lo..hi[:step]`)".to_string(),
            ));
        }
        if quantities.is_empty() {
            return Err(CliFailure::new(
                "scan needs at least one quantity (entropy, bound, sep-measure, phys-measure, \
                 ppt)"
                    .to_string(),
            ));
        }

        let mut sweeps = Vec::with_capacity(raw_sweeps.len());
        for raw in raw_sweeps {
            let step = raw.step.or(default_step).ok_or_else(|| {
                CliFailure::new(format!(
                    "sweep `{}` has no step; use `{}=lo..hi:step` or add `step=x`",
                    raw.name, raw.name
                ))
            })?;
            if !step.is_finite() || step <= 0.0 {
                return Err(CliFailure::new(format!(
                    "sweep `{}` needs a finite positive step, got {step}",
                    raw.name
                )));
            }
            if !raw.lo.is_finite() || !raw.hi.is_finite() || raw.lo > raw.hi {
                return Err(CliFailure::new(format!(
                    "sweep `{}` needs a finite range with lo <= hi, got {}..{}",
                    raw.name, raw.lo, raw.hi
                )));
            }
            let count = ((raw.hi - raw.lo) / step + 1.0 + 1e-9).floor() as usize;
            sweeps.push(SweepAxis {
                name: raw.name,
                lo: raw.lo,
                step,
                count,
            });
        }

        let mut parts = fixed_tokens;
        for axis in &sweeps {
            parts.push(format!("{}={:.17e}", axis.name, axis.lo));
        }
        let template = StateSpec::parse(&format!("{family}({})", parts.join(", ")))?;

        Ok(ScanSpec {
            template,
            sweeps,
            quantities,
        })
    }

    fn active_quantities(&self) -> impl Iterator<Item = Quantity> + '_ {
        QUANTITY_ORDER
            .into_iter()
            .filter(|q| self.quantities.contains(q))
    }

    fn header(&self) -> Vec<String> {
        let mut columns: Vec<String> = self.sweeps.iter().map(|s| s.name.clone()).collect();
        for quantity in self.active_quantities() {
            columns.extend(quantity.columns().iter().map(|c| c.to_string()));
        }
        columns.push("status".to_string());
        columns
    }

    fn quantity_column_count(&self) -> usize {
        self.active_quantities().map(|q| q.columns().len()).sum()
    }
}

/// Twelve significant digits, scientific notation.
fn fmt_float(value: f64) -> String {
    format!("{value:.11e}")
}

/// Errors that only invalidate one grid point: the state does not exist or
/// the requested quantity is undefined there. Anything else aborts the scan.
fn is_point_error(err: &Error) -> bool {
    matches!(
        err,
        Error::NotPositive { .. }
            | Error::ZeroNorm
            | Error::InvalidParameter(_)
            | Error::PureStateRequired(_)
    )
}

fn evaluate_quantities(
    state: &MultiState,
    spec: &ScanSpec,
    context: &ScanContext,
) -> entmeas::Result<Vec<String>> {
    let factors = state.shape().factor_count();
    let full = SubsystemSet::full(factors)?;
    let mut cells = Vec::with_capacity(spec.quantity_column_count());
    for quantity in spec.active_quantities() {
        match quantity {
            Quantity::Entropy => cells.push(fmt_float(total_marginal_entropy(state)?)),
            Quantity::Bound => {
                let options = BoundOptions {
                    max_total_dim: context.max_dim,
                    ..BoundOptions::default()
                };
                cells.push(fmt_float(
                    mixed_lower_bound(state, &full, 1, &options)?.value,
                ));
            }
            Quantity::SepMeasure => {
                let report = separability_measure(state, context.eps)?;
                cells.push(fmt_float(report.total()));
                let k = report.partition().map(|p| p.k()).unwrap_or(0);
                cells.push(k.to_string());
            }
            Quantity::PhysMeasure => {
                let mut options = HierarchyOptions::default();
                options.roof.seed = context.seed;
                options.max_total_dim = context.max_dim;
                let report = physical_hierarchy(state, context.mode, &options)?;
                let kind = match context.mode {
                    HierarchyMode::Bound => MeasureKind::LowerBound,
                    _ => MeasureKind::UpperBound,
                };
                cells.push(fmt_float(report.total_for_size(2, kind)));
                cells.push(fmt_float(report.value_of(&full, kind).unwrap_or(0.0)));
                cells.push(fmt_float(report.total()));
            }
            Quantity::Ppt => {
                let part = SubsystemSet::singleton(factors)?;
                let report = ppt_check(state, &part)?;
                cells.push(fmt_float(report.min_eigenvalue));
                cells.push(report.is_npt.to_string());
            }
        }
    }
    Ok(cells)
}

fn evaluate_row(
    spec: &ScanSpec,
    context: &ScanContext,
    index: usize,
) -> Result<Vec<String>, CliFailure> {
    let mut remaining = index;
    let mut values = vec![0.0; spec.sweeps.len()];
    for (slot, axis) in values.iter_mut().zip(&spec.sweeps).rev() {
        let offset = remaining % axis.count;
        remaining /= axis.count;
        *slot = axis.lo + offset as f64 * axis.step;
    }

    let mut point = spec.template.clone();
    for (axis, &value) in spec.sweeps.iter().zip(&values) {
        point.set_scalar(&axis.name, value);
    }

    let mut row: Vec<String> = values.iter().map(|&v| fmt_float(v)).collect();
    let outcome = point
        .build()
        .and_then(|state| evaluate_quantities(&state, spec, context));
    match outcome {
        Ok(cells) => {
            row.extend(cells);
            row.push("ok".to_string());
        }
        Err(err) if is_point_error(&err) => {
            row.extend(std::iter::repeat_n(
                String::new(),
                spec.quantity_column_count(),
            ));
            row.push("invalid".to_string());
        }
        Err(err) => return Err(err.into()),
    }
    Ok(row)
}

/// Evaluates the whole grid in parallel and renders the CSV bytes.
pub fn run_scan(spec: &ScanSpec, context: &ScanContext) -> Result<Vec<u8>, CliFailure> {
    let total: usize = spec.sweeps.iter().map(|s| s.count).product();
    let rows = (0..total)
        .into_par_iter()
        .map(|index| evaluate_row(spec, context, index))
        .collect::<Result<Vec<_>, CliFailure>>()?;

    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(spec.header())?;
    for row in rows {
        writer.write_record(&row)?;
    }
    writer
        .into_inner()
        .map_err(|err| CliFailure::new(err.to_string()))
}
