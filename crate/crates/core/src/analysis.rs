//! Result reduction: batch sweep drivers over the simulation core,
//! least-squares trend fitting, and deterministic CSV rendering whose
//! floating-point fields round-trip exactly.

use crate::config::{ConfigError, SimConfig};
use crate::decision::Scheme;
use crate::engine::{run, SimMetrics};

/// Slope, intercept, and coefficient of determination of a least-squares
/// line through a point set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least-squares line through `points`. Returns `None` with fewer than two
/// points or when every x coincides (the slope is undefined). A constant y
/// is fit perfectly, so its `r2` is one.
pub fn linear_fit(points: &[(f64, f64)]) -> Option<LinearFit> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let syy: f64 = points.iter().map(|p| p.1 * p.1).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let var_x = n * sxx - sx * sx;
    if var_x <= 0.0 {
        return None;
    }
    let cov = n * sxy - sx * sy;
    let var_y = n * syy - sy * sy;
    let slope = cov / var_x;
    let intercept = (sy - slope * sx) / n;
    let r2 = if var_y <= 0.0 { 1.0 } else { (cov * cov) / (var_x * var_y) };
    Some(LinearFit { slope, intercept, r2 })
}

/// Runs every (scheme, load) combination on an otherwise fixed
/// configuration, schemes outermost, preserving the given orders.
pub fn compare_schemes(
    base: &SimConfig,
    schemes: &[Scheme],
    loads: &[f64],
) -> Result<Vec<SimMetrics>, ConfigError> {
    let mut rows = Vec::with_capacity(schemes.len() * loads.len());
    for &scheme in schemes {
        for &load in loads {
            let mut config = base.clone();
            config.scheme = scheme;
            config.load = load;
            rows.push(run(&config)?.metrics);
        }
    }
    Ok(rows)
}

/// Runs the base configuration once per threshold, each time pinning the
/// deflection threshold instead of letting it adapt.
pub fn sweep_threshold(
    base: &SimConfig,
    thresholds: &[f64],
) -> Result<Vec<(f64, SimMetrics)>, ConfigError> {
    let mut rows = Vec::with_capacity(thresholds.len());
    for &sp_th in thresholds {
        let mut config = base.clone();
        config.pinned_sp_th = Some(sp_th);
        rows.push((sp_th, run(&config)?.metrics));
    }
    Ok(rows)
}

/// Runs the base configuration over the grid of threshold-weight pairs
/// built from `steps`, keeping the threshold adaptive. Pairs whose weights
/// sum past one are not valid configurations and are skipped.
pub fn sweep_weights(
    base: &SimConfig,
    steps: &[f64],
) -> Result<Vec<(f64, f64, SimMetrics)>, ConfigError> {
    let mut rows = Vec::new();
    for &beta_blr in steps {
        for &beta_u in steps {
            if beta_blr + beta_u > 1.0 + 1e-9 {
                continue;
            }
            let mut config = base.clone();
            config.beta_blr = beta_blr;
            config.beta_u = beta_u;
            config.pinned_sp_th = None;
            rows.push((beta_blr, beta_u, run(&config)?.metrics));
        }
    }
    Ok(rows)
}

/// Column order of the per-run CSV.
pub const METRICS_CSV_HEADER: &str = "scheme,topology,load,seed,blr,mean_delay_s,\
deflection_ratio,mean_offset_s,deflections,retransmissions,generated,delivered,lost";

/// Floating-point field format: 17 significant digits, which every f64
/// round-trips through exactly.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn metrics_fields(m: &SimMetrics) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        m.scheme,
        m.topology,
        fmt_f64(m.load),
        m.seed,
        fmt_f64(m.blr),
        fmt_f64(m.mean_delay_s),
        fmt_f64(m.deflection_ratio),
        fmt_f64(m.mean_offset_s),
        m.deflections,
        m.retransmissions,
        m.generated,
        m.delivered,
        m.lost,
    )
}

/// Renders comparison rows as CSV, one line per run, trailing newline
/// included. The output is a pure function of the rows.
pub fn metrics_csv(rows: &[SimMetrics]) -> String {
    let mut out = String::from(METRICS_CSV_HEADER);
    out.push('\n');
    for m in rows {
        out.push_str(&metrics_fields(m));
        out.push('\n');
    }
    out
}

/// CSV for a threshold sweep: the pinned threshold, then the run columns.
pub fn threshold_csv(rows: &[(f64, SimMetrics)]) -> String {
    let mut out = format!("sp_th,{METRICS_CSV_HEADER}\n");
    for (sp_th, m) in rows {
        out.push_str(&fmt_f64(*sp_th));
        out.push(',');
        out.push_str(&metrics_fields(m));
        out.push('\n');
    }
    out
}

/// CSV for a weight sweep: both threshold weights, then the run columns.
pub fn weights_csv(rows: &[(f64, f64, SimMetrics)]) -> String {
    let mut out = format!("beta_blr,beta_u,{METRICS_CSV_HEADER}\n");
    for (beta_blr, beta_u, m) in rows {
        out.push_str(&fmt_f64(*beta_blr));
        out.push(',');
        out.push_str(&fmt_f64(*beta_u));
        out.push(',');
        out.push_str(&metrics_fields(m));
        out.push('\n');
    }
    out
}
