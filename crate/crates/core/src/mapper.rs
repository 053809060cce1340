//! Stability maps over the channel-parameter plane.
//!
//! A sweep evaluates any subset of the analyzers on a rectangular grid,
//! either in the native coordinates (c1, tau) = (c c0, 1/c) or in the raw
//! pair (c0, c). Each grid cell carries one verdict per requested method:
//!
//!   ctcr       exact root accounting, evaluated once per c1 column as
//!              delay intervals and then sampled onto the cells;
//!   smallgain  the frequency-domain gain bound, delay independent;
//!   qs         separator feasibility at each requested projection order,
//!              run in ascending order (a certificate at order N embeds
//!              into every higher order, so later orders inherit it);
//!   sim        free-response integration of the neutral equation with a
//!              slope read off the trailing log norm.
//!
//! Exact delay intervals never land on cell centers cleanly: a cell whose
//! tau range straddles a crossing delay is marked `Boundary` and excluded
//! from every containment assertion, so rasterization cannot masquerade
//! as a soundness failure. Per-cell analyzer failures are recorded in the
//! cell and never abort a sweep.
//!
//! Sweeps are deterministic: cells are independent work items merged by
//! index, analyzer evaluation contains no randomness, and the text
//! exports format floats by shortest round trip, so identical inputs give
//! byte-identical files.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::ctcr::{stability_account, StabilityAccount, TransformedPoly};
use crate::error::{Error, Result};
use crate::model::{LtiPlant, WaveChannel};
use crate::ndde::{simulate_and_classify, SimConfig, SimVerdict};
use crate::qs::{backend_from_env, qs_feasible, QsVerdict, SdpBackend};
use crate::smallgain::{small_gain, SmallGainVerdict};
use crate::transfer::{plant_tf, RationalTf};

/// Relative tolerance handed to the H-infinity bisection inside sweeps.
const HINF_RTOL: f64 = 1e-6;

/// Simulated horizon in units of tau for map cells; together with the
/// default rate tolerance 1e-3/tau this resolves rates down to a few
/// times 1e-3/tau.
const SIM_HORIZON_TAUS: f64 = 60.0;

/// One uniformly sampled axis, both endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxisSpec {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl AxisSpec {
    pub fn new(lo: f64, hi: f64, count: usize) -> Self {
        AxisSpec { lo, hi, count }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count <= 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.count - 1) as f64;
        (0..self.count).map(|i| self.lo + i as f64 * step).collect()
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.count - 1) as f64
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.lo > 0.0) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::Invalid(format!(
                "{name} axis must be positive and finite, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        if !(self.lo < self.hi) {
            return Err(Error::Invalid(format!(
                "{name} axis needs lo < hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        if self.count < 2 {
            return Err(Error::Invalid(format!(
                "{name} axis needs at least 2 samples, got {}",
                self.count
            )));
        }
        Ok(())
    }
}

/// Interpretation of the two grid axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Coords {
    /// First axis c1 = c c0, second axis tau = 1/c.
    C1Tau,
    /// First axis c0, second axis c.
    C0C,
}

/// Analyzer selection for a sweep.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MethodSet {
    pub ctcr: bool,
    pub smallgain: bool,
    /// Projection orders for the separator test; empty disables it.
    pub qs_orders: Vec<usize>,
    pub sim: bool,
}

impl MethodSet {
    pub fn is_empty(&self) -> bool {
        !self.ctcr && !self.smallgain && self.qs_orders.is_empty() && !self.sim
    }

    /// Orders actually run: sorted and deduplicated.
    pub fn canonical_orders(&self) -> Vec<usize> {
        let mut orders = self.qs_orders.clone();
        orders.sort_unstable();
        orders.dedup();
        orders
    }
}

/// Complete description of one sweep.
#[derive(Debug, Clone, Serialize)]
pub struct GridSpec {
    pub coords: Coords,
    /// c1 axis in (c1, tau) coordinates; c0 axis in (c0, c) coordinates.
    pub a: AxisSpec,
    /// tau axis in (c1, tau) coordinates; c axis in (c0, c) coordinates.
    pub b: AxisSpec,
    pub methods: MethodSet,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let (a_name, b_name) = match self.coords {
            Coords::C1Tau => ("c1", "tau"),
            Coords::C0C => ("c0", "c"),
        };
        self.a.validate(a_name)?;
        self.b.validate(b_name)
    }
}

/// Per-cell verdict of one analyzer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CellVerdict {
    Stable,
    Unstable,
    /// The cell's tau range straddles a crossing delay; the exact verdict
    /// changes inside the cell.
    Boundary,
    /// The method ran but proved nothing here.
    Unknown,
    /// The analyzer failed on this cell; the detail carries the message.
    Error,
}

impl CellVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            CellVerdict::Stable => "stable",
            CellVerdict::Unstable => "unstable",
            CellVerdict::Boundary => "boundary",
            CellVerdict::Unknown => "unknown",
            CellVerdict::Error => "error",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodKind {
    Ctcr,
    Smallgain,
    Qs,
    Sim,
}

impl MethodKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MethodKind::Ctcr => "ctcr",
            MethodKind::Smallgain => "smallgain",
            MethodKind::Qs => "qs",
            MethodKind::Sim => "sim",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodResult {
    pub method: MethodKind,
    /// Projection order; present exactly for qs results.
    pub order: Option<usize>,
    pub verdict: CellVerdict,
    pub detail: String,
}

/// One grid cell. Whatever the grid coordinates, the channel is stored in
/// its native form: (c1, tau) determines (c0, c) and vice versa.
#[derive(Debug, Clone, Serialize)]
pub struct MapCell {
    pub c1: f64,
    pub tau: f64,
    pub results: Vec<MethodResult>,
    /// Smallest projection order whose separator certified this cell;
    /// None when no requested order did.
    pub qs_min_order: Option<usize>,
}

impl MapCell {
    pub fn result(&self, method: MethodKind, order: Option<usize>) -> Option<&MethodResult> {
        self.results.iter().find(|r| r.method == method && r.order == order)
    }
}

/// Sweep output: the grid axes and one cell per grid point.
#[derive(Debug, Clone, Serialize)]
pub struct MapTable {
    pub spec: GridSpec,
    pub axis_a: Vec<f64>,
    pub axis_b: Vec<f64>,
    /// Row major: the cell at axis indices (i, j) is cells[i * axis_b.len() + j].
    pub cells: Vec<MapCell>,
}

impl MapTable {
    pub fn cell(&self, i: usize, j: usize) -> &MapCell {
        &self.cells[i * self.axis_b.len() + j]
    }
}

/// The channel and the tau extent one cell covers.
struct CellGeometry {
    channel: WaveChannel,
    /// Half width of the cell in tau, in whichever direction is larger.
    tau_half_width: f64,
}

fn cell_geometry(spec: &GridSpec, a: f64, b: f64) -> Result<CellGeometry> {
    match spec.coords {
        Coords::C1Tau => Ok(CellGeometry {
            channel: WaveChannel::from_c1_tau(a, b)?,
            tau_half_width: 0.5 * spec.b.spacing(),
        }),
        Coords::C0C => {
            let channel = crate::model::make_channel(b, a)?;
            // The cell spans [c - dc/2, c + dc/2]; its tau extent follows
            // from tau = 1/c, clipped away from zero for coarse grids.
            let half_c = 0.5 * spec.b.spacing();
            let c_lo = (b - half_c).max(0.5 * spec.b.lo);
            let c_hi = b + half_c;
            let half = ((1.0 / c_lo - channel.tau).abs()).max((channel.tau - 1.0 / c_hi).abs());
            Ok(CellGeometry { channel, tau_half_width: half })
        }
    }
}

fn ctcr_result(account: &Result<StabilityAccount>, geo: &CellGeometry) -> MethodResult {
    let (verdict, detail) = match account {
        Err(e) => (CellVerdict::Error, e.to_string()),
        Ok(acc) => {
            let tau = geo.channel.tau;
            if acc.event_distance(tau) <= geo.tau_half_width {
                (CellVerdict::Boundary, format!("crossing delay within {:.3e} of the cell", geo.tau_half_width))
            } else {
                match acc.unstable_at(tau) {
                    Some(0) => (CellVerdict::Stable, "0 unstable roots".into()),
                    Some(k) => (CellVerdict::Unstable, format!("{k} unstable roots")),
                    None => (CellVerdict::Boundary, "on a crossing delay".into()),
                }
            }
        }
    };
    MethodResult { method: MethodKind::Ctcr, order: None, verdict, detail }
}

fn smallgain_result(plant: &LtiPlant, channel: &WaveChannel) -> MethodResult {
    let (verdict, detail) = match small_gain(plant, channel, HINF_RTOL) {
        Err(e) => (CellVerdict::Error, e.to_string()),
        Ok(report) => match report.verdict {
            SmallGainVerdict::Stable => {
                (CellVerdict::Stable, format!("margin {:.6e}", report.margin.unwrap_or(f64::NAN)))
            }
            SmallGainVerdict::Inconclusive => {
                (CellVerdict::Unknown, format!("margin {:.6e}", report.margin.unwrap_or(f64::NAN)))
            }
            SmallGainVerdict::Inapplicable => {
                (CellVerdict::Unknown, "gain bound inapplicable to this plant".into())
            }
        },
    };
    MethodResult { method: MethodKind::Smallgain, order: None, verdict, detail }
}

fn qs_results(
    orders: &[usize],
    plant: &LtiPlant,
    channel: &WaveChannel,
    backend: &dyn SdpBackend,
) -> (Vec<MethodResult>, Option<usize>) {
    let mut results = Vec::with_capacity(orders.len());
    let mut min_order = None;
    for &order in orders {
        let (verdict, detail) = match min_order {
            Some(first) => (
                CellVerdict::Stable,
                format!("implied by the order {first} certificate"),
            ),
            None => match qs_feasible(order, plant, channel, backend) {
                Err(e) => (CellVerdict::Error, e.to_string()),
                Ok(report) => match report.verdict {
                    QsVerdict::Stable => {
                        min_order = Some(order);
                        (CellVerdict::Stable, format!("separator certified at order {order}"))
                    }
                    QsVerdict::Unknown(reason) => (CellVerdict::Unknown, reason),
                },
            },
        };
        results.push(MethodResult { method: MethodKind::Qs, order: Some(order), verdict, detail });
    }
    (results, min_order)
}

fn sim_result(plant: &LtiPlant, channel: &WaveChannel) -> MethodResult {
    let config = map_sim_config(plant.dim(), channel);
    let (verdict, detail) = match simulate_and_classify(plant, channel, &config) {
        Err(e) => (CellVerdict::Error, e.to_string()),
        Ok((traj, sim)) => match sim {
            SimVerdict::Growing if traj.diverged => {
                (CellVerdict::Unstable, "free response overflowed".into())
            }
            SimVerdict::Growing => (CellVerdict::Unstable, "free response growing".into()),
            SimVerdict::Decaying => (CellVerdict::Stable, "free response decaying".into()),
            SimVerdict::Inconclusive => {
                (CellVerdict::Unknown, "tail slope below the rate tolerance".into())
            }
        },
    };
    MethodResult { method: MethodKind::Sim, order: None, verdict, detail }
}

/// Free response from the all-ones state over a horizon long enough for
/// the tail slope to resolve the default rate tolerance.
fn map_sim_config(dim: usize, channel: &WaveChannel) -> SimConfig {
    SimConfig::new(
        nalgebra::DVector::from_element(dim, 1.0),
        SIM_HORIZON_TAUS * channel.tau,
    )
}

/// Runs every requested analyzer over the grid. Analyzer failures land in
/// the affected cells; only invalid input, an unusable transfer function,
/// or an unavailable SDP backend abort the sweep.
pub fn sweep(plant: &LtiPlant, spec: &GridSpec) -> Result<MapTable> {
    spec.validate()?;
    let orders = spec.methods.canonical_orders();
    let backend = if orders.is_empty() { None } else { Some(backend_from_env()?) };
    let tf = if spec.methods.ctcr { Some(plant_tf(plant)?) } else { None };

    let axis_a = spec.a.values();
    let axis_b = spec.b.values();

    // In (c1, tau) coordinates the exact analysis is shared by the whole
    // column; in (c0, c) coordinates every cell has its own c1.
    let column_accounts: Option<Vec<Result<StabilityAccount>>> =
        match (&tf, spec.coords) {
            (Some(tf), Coords::C1Tau) => {
                let tau_max = spec.b.hi + spec.b.spacing();
                Some(
                    axis_a
                        .par_iter()
                        .map(|&c1| {
                            TransformedPoly::new(tf, c1)
                                .and_then(|tp| stability_account(&tp, tau_max))
                        })
                        .collect(),
                )
            }
            _ => None,
        };

    let b_count = axis_b.len();
    let cells: Vec<MapCell> = (0..axis_a.len() * b_count)
        .into_par_iter()
        .map(|idx| {
            let i = idx / b_count;
            let j = idx % b_count;
            let geo = match cell_geometry(spec, axis_a[i], axis_b[j]) {
                Ok(g) => g,
                Err(e) => {
                    // Unreachable for a validated grid; keep the cell
                    // instead of poisoning the sweep.
                    return MapCell {
                        c1: f64::NAN,
                        tau: f64::NAN,
                        results: vec![MethodResult {
                            method: MethodKind::Ctcr,
                            order: None,
                            verdict: CellVerdict::Error,
                            detail: e.to_string(),
                        }],
                        qs_min_order: None,
                    };
                }
            };
            let mut results = Vec::new();
            if spec.methods.ctcr {
                let tf = tf.as_ref().expect("transfer function computed for ctcr");
                match &column_accounts {
                    Some(accounts) => results.push(ctcr_result(&accounts[i], &geo)),
                    None => {
                        let tau_max = geo.channel.tau + geo.tau_half_width * 2.0;
                        let account = TransformedPoly::new(tf, geo.channel.c1)
                            .and_then(|tp| stability_account(&tp, tau_max));
                        results.push(ctcr_result(&account, &geo));
                    }
                }
            }
            if spec.methods.smallgain {
                results.push(smallgain_result(plant, &geo.channel));
            }
            let mut qs_min_order = None;
            if let Some(backend) = &backend {
                let (mut qs, min) = qs_results(&orders, plant, &geo.channel, backend.as_ref());
                results.append(&mut qs);
                qs_min_order = min;
            }
            if spec.methods.sim {
                results.push(sim_result(plant, &geo.channel));
            }
            MapCell { c1: geo.channel.c1, tau: geo.channel.tau, results, qs_min_order }
        })
        .collect();

    Ok(MapTable { spec: spec.clone(), axis_a, axis_b, cells })
}

fn sanitize(detail: &str) -> String {
    detail.replace(',', ";").replace('\n', " ")
}

/// Writes the long-format CSV `c1,tau,method,order,verdict,detail`, one
/// row per cell and method, cells in storage order.
pub fn write_csv<W: Write>(table: &MapTable, out: &mut W) -> Result<()> {
    writeln!(out, "c1,tau,method,order,verdict,detail")?;
    for cell in &table.cells {
        for r in &cell.results {
            let order = r.order.map_or(String::new(), |o| o.to_string());
            writeln!(
                out,
                "{},{},{},{},{},{}",
                cell.c1,
                cell.tau,
                r.method.as_str(),
                order,
                r.verdict.as_str(),
                sanitize(&r.detail)
            )?;
        }
    }
    Ok(())
}

/// Writes the table as JSON, nested by method: each method maps to an
/// array of per-cell records in storage order.
pub fn write_json<W: Write>(table: &MapTable, out: &mut W) -> Result<()> {
    #[derive(Serialize)]
    struct Record<'a> {
        c1: f64,
        tau: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        order: Option<usize>,
        verdict: CellVerdict,
        detail: &'a str,
    }
    #[derive(Serialize)]
    struct MinOrder {
        c1: f64,
        tau: f64,
        order: usize,
    }
    let mut methods: std::collections::BTreeMap<&str, Vec<Record>> = Default::default();
    for cell in &table.cells {
        for r in &cell.results {
            methods.entry(r.method.as_str()).or_default().push(Record {
                c1: cell.c1,
                tau: cell.tau,
                order: r.order,
                verdict: r.verdict,
                detail: &r.detail,
            });
        }
    }
    let qs_min: Vec<MinOrder> = table
        .cells
        .iter()
        .filter_map(|c| c.qs_min_order.map(|order| MinOrder { c1: c.c1, tau: c.tau, order }))
        .collect();
    let doc = serde_json::json!({
        "grid": table.spec,
        "axis_a": table.axis_a,
        "axis_b": table.axis_b,
        "methods": methods,
        "qs_min_order": qs_min,
    });
    serde_json::to_writer_pretty(&mut *out, &doc)
        .map_err(|e| Error::Numerical(format!("json serialization: {e}")))?;
    writeln!(out)?;
    Ok(())
}

/// Numeric encoding used by the gnuplot export.
pub fn verdict_code(v: CellVerdict) -> f64 {
    match v {
        CellVerdict::Stable => 2.0,
        CellVerdict::Boundary => 1.0,
        CellVerdict::Unstable => 0.0,
        CellVerdict::Unknown => -1.0,
        CellVerdict::Error => -2.0,
    }
}

/// Writes one method's verdicts as a gnuplot nonuniform matrix:
/// first row `N a_1 .. a_N`, then one row per b value. Render with
/// `plot 'file' nonuniform matrix with image`.
pub fn write_gnuplot<W: Write>(
    table: &MapTable,
    method: MethodKind,
    order: Option<usize>,
    out: &mut W,
) -> Result<()> {
    write!(out, "{}", table.axis_a.len())?;
    for a in &table.axis_a {
        write!(out, " {a}")?;
    }
    writeln!(out)?;
    for (j, b) in table.axis_b.iter().enumerate() {
        write!(out, "{b}")?;
        for i in 0..table.axis_a.len() {
            let r = table.cell(i, j).result(method, order).ok_or_else(|| {
                Error::Invalid(format!(
                    "method {}{} not present in the table",
                    method.as_str(),
                    order.map_or(String::new(), |o| format!("({o})"))
                ))
            })?;
            write!(out, " {}", verdict_code(r.verdict))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Per-column minimum wave speed on a (c0, c) table: for each c0, the
/// smallest sampled c whose whole upper range [c, c_hi] is stable for the
/// chosen method. Boundary cells do not count as stable, so the curve errs
/// upward by at most one cell. A column with no qualifying c records
/// +infinity.
pub fn cmin_extraction(
    table: &MapTable,
    method: MethodKind,
    order: Option<usize>,
) -> Result<Vec<(f64, f64)>> {
    if table.spec.coords != Coords::C0C {
        return Err(Error::Invalid(
            "minimum wave speed extraction needs a (c0, c) table".into(),
        ));
    }
    let mut curve = Vec::with_capacity(table.axis_a.len());
    for (i, &c0) in table.axis_a.iter().enumerate() {
        let mut c_min = f64::INFINITY;
        for (j, &c) in table.axis_b.iter().enumerate().rev() {
            let r = table.cell(i, j).result(method, order).ok_or_else(|| {
                Error::Invalid(format!("method {} not present in the table", method.as_str()))
            })?;
            if r.verdict == CellVerdict::Stable {
                c_min = c;
            } else {
                break;
            }
        }
        curve.push((c0, c_min));
    }
    Ok(curve)
}

/// Containment-chain check on a computed table. Boundary, unknown, and
/// error cells of the exact method are excluded; among the rest, every
/// certificate must land inside the exact stable set and the qs orders
/// must be monotone.
#[derive(Debug, Clone, Serialize)]
pub struct ContainmentReport {
    pub checked_cells: usize,
    pub violations: Vec<String>,
}

impl ContainmentReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_containment(table: &MapTable) -> ContainmentReport {
    let orders = table.spec.methods.canonical_orders();
    let mut violations = Vec::new();
    let mut checked = 0usize;
    for cell in &table.cells {
        let at = |m: MethodKind, o: Option<usize>| cell.result(m, o).map(|r| r.verdict);
        let exact = at(MethodKind::Ctcr, None);

        let mut prev_stable = false;
        for &order in &orders {
            let stable = at(MethodKind::Qs, Some(order)) == Some(CellVerdict::Stable);
            if prev_stable && !stable {
                violations.push(format!(
                    "c1={} tau={}: qs order {} lost a lower-order certificate",
                    cell.c1, cell.tau, order
                ));
            }
            prev_stable = stable;
        }

        let exact_unstable = exact == Some(CellVerdict::Unstable);
        if exact.is_some() {
            checked += 1;
        }
        if !exact_unstable {
            continue;
        }
        if at(MethodKind::Smallgain, None) == Some(CellVerdict::Stable) {
            violations.push(format!(
                "c1={} tau={}: smallgain certifies an exactly unstable cell",
                cell.c1, cell.tau
            ));
        }
        for &order in &orders {
            if at(MethodKind::Qs, Some(order)) == Some(CellVerdict::Stable) {
                violations.push(format!(
                    "c1={} tau={}: qs order {} certifies an exactly unstable cell",
                    cell.c1, cell.tau, order
                ));
            }
        }
    }
    ContainmentReport { checked_cells: checked, violations }
}

/// Result of replaying sampled cells through the time-domain integrator.
#[derive(Debug, Clone, Serialize)]
pub struct SimCheckReport {
    pub sampled: usize,
    pub agreements: usize,
    pub inconclusive: usize,
    pub contradictions: Vec<String>,
}

impl SimCheckReport {
    pub fn passed(&self) -> bool {
        self.contradictions.is_empty()
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn shuffled(mut items: Vec<usize>, seed: u64) -> Vec<usize> {
    let mut state = seed;
    for i in (1..items.len()).rev() {
        let j = (splitmix64(&mut state) % (i as u64 + 1)) as usize;
        items.swap(i, j);
    }
    items
}

/// Cross-validates exact verdicts against the integrator on a stratified
/// sample: up to `sample_count` cells drawn from the exactly stable and
/// exactly unstable strata in proportion to their sizes, at least one from
/// each nonempty stratum. A contradiction is a decisive simulation verdict
/// against the exact one; inconclusive runs are counted but never fail.
/// The seed fixes the sample, nothing else.
pub fn sim_cross_check(
    plant: &LtiPlant,
    table: &MapTable,
    sample_count: usize,
    seed: u64,
) -> Result<SimCheckReport> {
    if !table.spec.methods.ctcr {
        return Err(Error::Invalid("simulation cross-check needs ctcr in the table".into()));
    }
    let mut stable_idx = Vec::new();
    let mut unstable_idx = Vec::new();
    for (idx, cell) in table.cells.iter().enumerate() {
        match cell.result(MethodKind::Ctcr, None).map(|r| r.verdict) {
            Some(CellVerdict::Stable) => stable_idx.push(idx),
            Some(CellVerdict::Unstable) => unstable_idx.push(idx),
            _ => {}
        }
    }
    let total = stable_idx.len() + unstable_idx.len();
    let mut picks: Vec<usize> = Vec::new();
    if total > 0 && sample_count > 0 {
        let want = sample_count.min(total);
        let mut from_stable =
            ((want as f64 * stable_idx.len() as f64 / total as f64).round() as usize)
                .min(stable_idx.len());
        if !stable_idx.is_empty() {
            from_stable = from_stable.max(1);
        }
        let mut from_unstable = (want - from_stable.min(want)).min(unstable_idx.len());
        if !unstable_idx.is_empty() {
            from_unstable = from_unstable.max(1);
        }
        picks.extend(shuffled(stable_idx, seed ^ 0x5741_424c_4500).into_iter().take(from_stable));
        picks.extend(
            shuffled(unstable_idx, seed ^ 0x554e_5354_4142).into_iter().take(from_unstable),
        );
        picks.sort_unstable();
    }

    let outcomes: Vec<(usize, Result<SimVerdict>)> = picks
        .par_iter()
        .map(|&idx| {
            let cell = &table.cells[idx];
            let channel = WaveChannel::from_c1_tau(cell.c1, cell.tau)?;
            let config = map_sim_config(plant.dim(), &channel);
            simulate_and_classify(plant, &channel, &config).map(|(_, v)| (idx, v))
        })
        .map(|r| match r {
            Ok((idx, v)) => (idx, Ok(v)),
            Err(e) => (usize::MAX, Err(e)),
        })
        .collect();

    let mut agreements = 0usize;
    let mut inconclusive = 0usize;
    let mut contradictions = Vec::new();
    for (idx, outcome) in outcomes {
        let verdict = outcome?;
        let cell = &table.cells[idx];
        let exact = cell.result(MethodKind::Ctcr, None).map(|r| r.verdict);
        match (exact, verdict) {
            (Some(CellVerdict::Stable), SimVerdict::Decaying)
            | (Some(CellVerdict::Unstable), SimVerdict::Growing) => agreements += 1,
            (_, SimVerdict::Inconclusive) => inconclusive += 1,
            (Some(CellVerdict::Stable), SimVerdict::Growing) => contradictions.push(format!(
                "c1={} tau={}: exactly stable but the free response grows",
                cell.c1, cell.tau
            )),
            (Some(CellVerdict::Unstable), SimVerdict::Decaying) => contradictions.push(format!(
                "c1={} tau={}: exactly unstable but the free response decays",
                cell.c1, cell.tau
            )),
            _ => {}
        }
    }
    Ok(SimCheckReport { sampled: picks.len(), agreements, inconclusive, contradictions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{hurwitz_plant, oscillator_plant};
    use crate::smallgain::hinf_norm;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn spec(coords: Coords, a: (f64, f64, usize), b: (f64, f64, usize), methods: MethodSet) -> GridSpec {
        GridSpec {
            coords,
            a: AxisSpec::new(a.0, a.1, a.2),
            b: AxisSpec::new(b.0, b.1, b.2),
            methods,
        }
    }

    #[test]
    fn grid_validation_rejects_degenerate_axes() {
        let m = MethodSet::default();
        for bad in [
            spec(Coords::C1Tau, (1.0, 1.0, 5), (0.1, 2.0, 5), m.clone()),
            spec(Coords::C1Tau, (2.0, 1.0, 5), (0.1, 2.0, 5), m.clone()),
            spec(Coords::C1Tau, (0.5, 1.5, 1), (0.1, 2.0, 5), m.clone()),
            spec(Coords::C1Tau, (0.5, 1.5, 5), (0.0, 2.0, 5), m.clone()),
            spec(Coords::C0C, (-0.5, 1.5, 5), (0.1, 2.0, 5), m.clone()),
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
        assert!(spec(Coords::C1Tau, (0.5, 1.5, 5), (0.1, 2.0, 5), m).validate().is_ok());
    }

    #[test]
    fn axis_values_hit_both_endpoints_uniformly() {
        let axis = AxisSpec::new(0.2, 2.0, 10);
        let v = axis.values();
        assert_eq!(v.len(), 10);
        assert_relative_eq!(v[0], 0.2, max_relative = 1e-15);
        assert_relative_eq!(v[9], 2.0, max_relative = 1e-15);
        for w in v.windows(2) {
            assert_relative_eq!(w[1] - w[0], axis.spacing(), max_relative = 1e-12);
        }
    }

    #[test]
    fn empty_method_set_yields_bare_cells() {
        let plant = oscillator_plant();
        let table = sweep(
            &plant,
            &spec(Coords::C1Tau, (0.5, 1.5, 3), (0.2, 1.0, 3), MethodSet::default()),
        )
        .unwrap();
        assert_eq!(table.cells.len(), 9);
        assert!(table.cells.iter().all(|c| c.results.is_empty() && c.qs_min_order.is_none()));
        let mut csv = Vec::new();
        write_csv(&table, &mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap(), "c1,tau,method,order,verdict,detail\n");
    }

    #[test]
    fn exact_rasterization_matches_a_fresh_account() {
        let plant = oscillator_plant();
        let methods = MethodSet { ctcr: true, ..Default::default() };
        let grid = spec(Coords::C1Tau, (0.9, 1.1, 2), (0.05, 2.0, 40), methods);
        let table = sweep(&plant, &grid).unwrap();
        let tf = plant_tf(&plant).unwrap();
        let half = 0.5 * grid.b.spacing();
        for (i, &c1) in table.axis_a.iter().enumerate() {
            let tp = TransformedPoly::new(&tf, c1).unwrap();
            let account = stability_account(&tp, grid.b.hi + grid.b.spacing()).unwrap();
            for (j, &tau) in table.axis_b.iter().enumerate() {
                let got = table.cell(i, j).result(MethodKind::Ctcr, None).unwrap().verdict;
                if account.event_distance(tau) <= half {
                    assert_eq!(got, CellVerdict::Boundary, "c1={c1} tau={tau}");
                } else {
                    let want = match account.unstable_at(tau).unwrap() {
                        0 => CellVerdict::Stable,
                        _ => CellVerdict::Unstable,
                    };
                    assert_eq!(got, want, "c1={c1} tau={tau}");
                }
            }
        }
        // The matched column must show a genuine stable window framed by
        // unstable cells on both sides.
        let i = 1;
        assert_relative_eq!(table.axis_a[i], 1.1, max_relative = 1e-12);
        let verdicts: Vec<CellVerdict> = (0..40)
            .map(|j| table.cell(i, j).result(MethodKind::Ctcr, None).unwrap().verdict)
            .collect();
        assert!(verdicts.contains(&CellVerdict::Stable));
        assert!(verdicts.contains(&CellVerdict::Unstable));
    }

    #[test]
    fn legacy_coordinates_recover_the_native_channel() {
        let plant = oscillator_plant();
        let methods = MethodSet { ctcr: true, ..Default::default() };
        let grid = spec(Coords::C0C, (0.4, 1.2, 3), (0.6, 2.0, 5), methods);
        let table = sweep(&plant, &grid).unwrap();
        let tf = plant_tf(&plant).unwrap();
        for (i, &c0) in table.axis_a.iter().enumerate() {
            for (j, &c) in table.axis_b.iter().enumerate() {
                let cell = table.cell(i, j);
                assert_relative_eq!(cell.c1, c * c0, max_relative = 1e-14);
                assert_relative_eq!(cell.tau, 1.0 / c, max_relative = 1e-14);
                let got = cell.result(MethodKind::Ctcr, None).unwrap().verdict;
                if got == CellVerdict::Boundary {
                    continue;
                }
                let tp = TransformedPoly::new(&tf, cell.c1).unwrap();
                let account = stability_account(&tp, cell.tau * 1.5).unwrap();
                let want = match account.unstable_at(cell.tau).unwrap() {
                    0 => CellVerdict::Stable,
                    _ => CellVerdict::Unstable,
                };
                assert_eq!(got, want, "c0={c0} c={c}");
            }
        }
    }

    #[test]
    fn gain_bound_region_is_the_exact_half_plane() {
        let plant = hurwitz_plant();
        let hinf = hinf_norm(&plant, 1e-9).unwrap().norm;
        let methods = MethodSet { smallgain: true, ..Default::default() };
        let table =
            sweep(&plant, &spec(Coords::C1Tau, (0.5, 1.5, 11), (0.5, 2.0, 4), methods)).unwrap();
        for cell in &table.cells {
            let got = cell.result(MethodKind::Smallgain, None).unwrap().verdict;
            let want = if cell.c1 > hinf { CellVerdict::Stable } else { CellVerdict::Unknown };
            assert_eq!(got, want, "c1={}", cell.c1);
        }
    }

    #[test]
    fn qs_cells_nest_and_record_the_minimum_order() {
        let plant = oscillator_plant();
        let methods = MethodSet {
            ctcr: true,
            qs_orders: vec![2, 0, 2, 3],
            ..Default::default()
        };
        let table =
            sweep(&plant, &spec(Coords::C1Tau, (0.9, 1.1, 2), (0.5, 0.9, 2), methods)).unwrap();
        for cell in &table.cells {
            let orders = [0usize, 2, 3];
            let verdicts: Vec<CellVerdict> = orders
                .iter()
                .map(|&o| cell.result(MethodKind::Qs, Some(o)).unwrap().verdict)
                .collect();
            assert_eq!(cell.results.iter().filter(|r| r.method == MethodKind::Qs).count(), 3);
            match cell.qs_min_order {
                Some(min) => {
                    for (&o, &v) in orders.iter().zip(&verdicts) {
                        let want =
                            if o >= min { CellVerdict::Stable } else { CellVerdict::Unknown };
                        assert_eq!(v, want, "order {o} at c1={} tau={}", cell.c1, cell.tau);
                    }
                }
                None => assert!(verdicts.iter().all(|&v| v != CellVerdict::Stable)),
            }
        }
        let report = check_containment(&table);
        assert!(report.passed(), "{:?}", report.violations);
        assert!(report.checked_cells > 0);
        assert!(table.cells.iter().any(|c| c.qs_min_order.is_some()));
    }

    #[test]
    fn containment_check_flags_a_planted_violation() {
        let plant = oscillator_plant();
        let methods = MethodSet { ctcr: true, qs_orders: vec![0], ..Default::default() };
        let mut table =
            sweep(&plant, &spec(Coords::C1Tau, (0.9, 1.1, 2), (1.9, 2.2, 2), methods)).unwrap();
        let victim = table
            .cells
            .iter()
            .position(|c| {
                c.result(MethodKind::Ctcr, None).map(|r| r.verdict) == Some(CellVerdict::Unstable)
            })
            .expect("grid includes an exactly unstable cell");
        for r in &mut table.cells[victim].results {
            if r.method == MethodKind::Qs {
                r.verdict = CellVerdict::Stable;
                r.detail = "planted".into();
            }
        }
        let report = check_containment(&table);
        assert_eq!(report.violations.len(), 1);
        assert!(report.violations[0].contains("qs order 0"), "{:?}", report.violations);
    }

    #[test]
    fn identical_sweeps_serialize_identically() {
        let plant = oscillator_plant();
        let methods = MethodSet { ctcr: true, smallgain: true, qs_orders: vec![0, 1], sim: false };
        let grid = spec(Coords::C1Tau, (0.8, 1.2, 3), (0.4, 1.2, 3), methods);
        let t1 = sweep(&plant, &grid).unwrap();
        let t2 = sweep(&plant, &grid).unwrap();
        let mut b1 = Vec::new();
        let mut b2 = Vec::new();
        write_csv(&t1, &mut b1).unwrap();
        write_csv(&t2, &mut b2).unwrap();
        assert_eq!(b1, b2);
        let text = String::from_utf8(b1).unwrap();
        assert_eq!(text.lines().count(), 1 + 9 * 4);
        let mut j1 = Vec::new();
        let mut j2 = Vec::new();
        write_json(&t1, &mut j1).unwrap();
        write_json(&t2, &mut j2).unwrap();
        assert_eq!(j1, j2);
        let doc: serde_json::Value = serde_json::from_slice(&j1).unwrap();
        assert_eq!(doc["methods"]["ctcr"].as_array().unwrap().len(), 9);
        assert_eq!(doc["methods"]["qs"].as_array().unwrap().len(), 18);
    }

    #[test]
    fn minimum_speed_curve_tracks_the_gain_bound() {
        let plant = hurwitz_plant();
        let hinf = hinf_norm(&plant, 1e-9).unwrap().norm;
        let methods = MethodSet { smallgain: true, ..Default::default() };
        let grid = spec(Coords::C0C, (0.25, 5.0, 4), (0.2, 3.0, 29), methods);
        let table = sweep(&plant, &grid).unwrap();
        let curve = cmin_extraction(&table, MethodKind::Smallgain, None).unwrap();
        assert_eq!(curve.len(), 4);
        let dc = grid.b.spacing();
        for &(c0, c_min) in &curve {
            let bound = hinf / c0;
            if bound > grid.b.hi {
                assert!(c_min.is_infinite(), "c0={c0}");
            } else if bound < grid.b.lo {
                assert_relative_eq!(c_min, grid.b.lo, max_relative = 1e-12);
            } else {
                assert!(c_min > bound && c_min <= bound + 1.5 * dc, "c0={c0}: {c_min} vs {bound}");
            }
        }
        let c1_table = sweep(
            &plant,
            &spec(
                Coords::C1Tau,
                (0.5, 1.5, 2),
                (0.5, 1.0, 2),
                MethodSet { smallgain: true, ..Default::default() },
            ),
        )
        .unwrap();
        assert!(cmin_extraction(&c1_table, MethodKind::Smallgain, None).is_err());
    }

    #[test]
    fn integrator_sample_agrees_with_the_exact_map() {
        let plant = oscillator_plant();
        let methods = MethodSet { ctcr: true, ..Default::default() };
        let grid = spec(Coords::C1Tau, (0.8, 1.0, 2), (0.3, 2.2, 8), methods);
        let table = sweep(&plant, &grid).unwrap();
        let report = sim_cross_check(&plant, &table, 6, 0x5eed).unwrap();
        assert!(report.passed(), "{:?}", report.contradictions);
        assert_eq!(report.sampled, 6);
        assert!(report.agreements > 0);
        let replay = sim_cross_check(&plant, &table, 6, 0x5eed).unwrap();
        assert_eq!(report.agreements, replay.agreements);
        assert_eq!(report.inconclusive, replay.inconclusive);
        assert_eq!(report.sampled, replay.sampled);
    }

    #[test]
    fn gnuplot_matrix_covers_the_grid() {
        let plant = hurwitz_plant();
        let methods = MethodSet { smallgain: true, ..Default::default() };
        let table =
            sweep(&plant, &spec(Coords::C1Tau, (0.5, 1.5, 3), (0.5, 1.0, 2), methods)).unwrap();
        let mut buf = Vec::new();
        write_gnuplot(&table, MethodKind::Smallgain, None, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 2);
        assert!(lines[0].starts_with("3 "), "{}", lines[0]);
        for line in &lines[1..] {
            assert_eq!(line.split_whitespace().count(), 1 + 3, "{line}");
        }
        let mut missing = Vec::new();
        assert!(write_gnuplot(&table, MethodKind::Ctcr, None, &mut missing).is_err());
    }

    proptest! {
        #[test]
        fn axis_sampling_stays_inside_bounds(
            lo in 1e-3..10.0f64,
            span in 1e-3..10.0f64,
            count in 2usize..50,
        ) {
            let axis = AxisSpec::new(lo, lo + span, count);
            let v = axis.values();
            prop_assert_eq!(v.len(), count);
            prop_assert!(v.windows(2).all(|w| w[0] < w[1]));
            prop_assert!((v[0] - lo).abs() <= 1e-12 * lo.max(1.0));
            prop_assert!((v[count - 1] - (lo + span)).abs() <= 1e-9 * (lo + span));
        }
    }
}
