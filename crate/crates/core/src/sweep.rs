//! 1D/2D parameter sweeps of the full pipeline with stability masking, and
//! their CSV serialization.

use crate::dynamics::{build_diffusion, build_drift, stability};
use crate::entanglement::{extract_pair, log_negativity, Mode, ModePair};
use crate::lyapunov::solve_lyapunov;
use crate::meanfield::{solve_mean_field, MeanFieldError, MeanFieldMode};
use crate::model::{ParamError, ParamField, SystemParams};
use crate::scalar::Scalar;
use rayon::prelude::*;
use serde_json::Value;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use thiserror::Error;

pub const DEFAULT_COUNT_1D: usize = 101;
pub const DEFAULT_COUNT_2D: usize = 61;
pub const BISECTION_TOL: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("axis `{field}`: {reason}")]
    BadAxis { field: String, reason: String },
    #[error("unknown observable `{0}`")]
    UnknownObservable(String),
    #[error("sweep config: {0}")]
    Config(String),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Observable {
    Stability,
    MaxRealPart,
    ECB1,
    ECB2,
    EB1B2,
    /// Effective cavity-c detuning at the mean-field point.
    DeltaCEff,
}

impl Observable {
    pub const ALL: [Observable; 6] = [
        Observable::Stability,
        Observable::MaxRealPart,
        Observable::ECB1,
        Observable::ECB2,
        Observable::EB1B2,
        Observable::DeltaCEff,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Observable::Stability => "stability",
            Observable::MaxRealPart => "max_real_part",
            Observable::ECB1 => "E_cB1",
            Observable::ECB2 => "E_cB2",
            Observable::EB1B2 => "E_B1B2",
            Observable::DeltaCEff => "delta_c_eff",
        }
    }

    /// Mode pair for entanglement observables.
    pub fn pair(self) -> Option<ModePair> {
        let (a, b) = match self {
            Observable::ECB1 => (Mode::CavityC, Mode::Vib1),
            Observable::ECB2 => (Mode::CavityC, Mode::Vib2),
            Observable::EB1B2 => (Mode::Vib1, Mode::Vib2),
            _ => return None,
        };
        ModePair::new(a, b).ok()
    }

    /// Stability and the max real part always have their own columns.
    fn has_column(self) -> bool {
        !matches!(self, Observable::Stability | Observable::MaxRealPart)
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Observable {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Observable::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| SweepError::UnknownObservable(s.to_owned()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AxisScale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub field: ParamField,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub scale: AxisScale,
}

impl Axis {
    pub fn linear(field: ParamField, min: f64, max: f64, count: usize) -> Result<Self, SweepError> {
        Self::new(field, min, max, count, AxisScale::Linear)
    }

    pub fn log(field: ParamField, min: f64, max: f64, count: usize) -> Result<Self, SweepError> {
        Self::new(field, min, max, count, AxisScale::Log)
    }

    /// Integer fields get their count clipped to the integers in `[min, max]`.
    pub fn new(
        field: ParamField,
        min: f64,
        max: f64,
        count: usize,
        scale: AxisScale,
    ) -> Result<Self, SweepError> {
        let bad = |reason: &str| SweepError::BadAxis {
            field: field.name().to_owned(),
            reason: reason.to_owned(),
        };
        if !(min.is_finite() && max.is_finite()) {
            return Err(bad("bounds must be finite"));
        }
        if min > max {
            return Err(bad("min exceeds max"));
        }
        if count < 2 {
            return Err(bad("count must be at least 2"));
        }
        if scale == AxisScale::Log && min <= 0.0 {
            return Err(bad("log axis needs positive bounds"));
        }
        let mut count = count;
        if field.is_integer() {
            if min < 0.0 {
                return Err(bad("integer field cannot be negative"));
            }
            let span = max.floor() - min.ceil();
            if span < 0.0 {
                return Err(bad("no integer in range"));
            }
            if span >= 1.0 {
                count = count.min(span as usize + 1);
            }
        }
        Ok(Self {
            field,
            min,
            max,
            count,
            scale,
        })
    }

    pub fn values(&self) -> Vec<f64> {
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let t = i as f64 / last;
                let x = match self.scale {
                    AxisScale::Linear if i == self.count - 1 => self.max,
                    AxisScale::Linear => self.min + (self.max - self.min) * t,
                    AxisScale::Log if i == self.count - 1 => self.max,
                    AxisScale::Log => self.min * (self.max / self.min).powf(t),
                };
                if self.field.is_integer() {
                    let lo = self.min.ceil();
                    let hi = self.max.floor();
                    x.round().clamp(lo, hi)
                } else {
                    x
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec<T = f64> {
    pub base: SystemParams<T>,
    pub axis_1: Axis,
    pub axis_2: Option<Axis>,
    pub observables: Vec<Observable>,
    pub mode: MeanFieldMode,
}

impl<T: Scalar> SweepSpec<T> {
    pub fn new(base: SystemParams<T>, axis_1: Axis, observables: Vec<Observable>) -> Self {
        Self {
            base,
            axis_1,
            axis_2: None,
            observables,
            mode: MeanFieldMode::default(),
        }
    }

    pub fn with_axis_2(mut self, axis: Axis) -> Self {
        self.axis_2 = Some(axis);
        self
    }

    pub fn with_mode(mut self, mode: MeanFieldMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn axes(&self) -> Vec<Axis> {
        std::iter::once(self.axis_1).chain(self.axis_2).collect()
    }

    /// Observables that get a CSV column, deduplicated in request order.
    pub fn value_columns(&self) -> Vec<Observable> {
        let mut cols: Vec<Observable> = Vec::new();
        for &o in &self.observables {
            if o.has_column() && !cols.contains(&o) {
                cols.push(o);
            }
        }
        cols
    }

    /// Grid points in row order, axis 2 fastest.
    pub fn grid(&self) -> Vec<Vec<f64>> {
        let v1 = self.axis_1.values();
        match &self.axis_2 {
            None => v1.into_iter().map(|x| vec![x]).collect(),
            Some(a2) => {
                let v2 = a2.values();
                v1.iter()
                    .flat_map(|&x| v2.iter().map(move |&y| vec![x, y]))
                    .collect()
            }
        }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        self.base.validate()?;
        for axis in self.axes() {
            Axis::new(axis.field, axis.min, axis.max, axis.count, axis.scale)?;
        }
        if let Some(a2) = &self.axis_2 {
            if a2.field == self.axis_1.field {
                return Err(SweepError::BadAxis {
                    field: a2.field.name().to_owned(),
                    reason: "both axes sweep the same field".to_owned(),
                });
            }
        }
        Ok(())
    }
}

impl SweepSpec<f64> {
    /// Reads a flat parameter object plus the keys `axis1`, `axis2`,
    /// `observables` and `mode`. Axes are given either as nested objects or
    /// as dotted keys (`"axis1.field"`, ...).
    pub fn from_json_value(value: &Value) -> Result<Self, SweepError> {
        let obj = value
            .as_object()
            .ok_or_else(|| SweepError::Config("top level must be an object".to_owned()))?;
        let mut params = serde_json::Map::new();
        let mut axes: [serde_json::Map<String, Value>; 2] = Default::default();
        let mut observables = None;
        let mut mode = MeanFieldMode::default();
        for (key, v) in obj {
            match key.as_str() {
                "axis1" | "axis2" => {
                    let slot = &mut axes[usize::from(key == "axis2")];
                    let inner = v.as_object().ok_or_else(|| {
                        SweepError::Config(format!("`{key}` must be an object"))
                    })?;
                    slot.extend(inner.clone());
                }
                "observables" => observables = Some(v.clone()),
                "mode" => {
                    mode = v
                        .as_str()
                        .ok_or_else(|| SweepError::Config("`mode` must be a string".to_owned()))?
                        .parse()
                        .map_err(SweepError::Config)?;
                }
                k => match k.split_once('.') {
                    Some(("axis1", sub)) => {
                        axes[0].insert(sub.to_owned(), v.clone());
                    }
                    Some(("axis2", sub)) => {
                        axes[1].insert(sub.to_owned(), v.clone());
                    }
                    _ => {
                        params.insert(key.clone(), v.clone());
                    }
                },
            }
        }
        let base = SystemParams::from_json_value(&Value::Object(params))?;
        let axis_1 = if axes[0].is_empty() {
            return Err(SweepError::Config("missing `axis1`".to_owned()));
        } else {
            axis_from_json(&axes[0], DEFAULT_COUNT_1D)?
        };
        let default_count = if axes[1].is_empty() {
            DEFAULT_COUNT_1D
        } else {
            DEFAULT_COUNT_2D
        };
        let axis_1 = if axes[1].is_empty() || axes[0].contains_key("count") {
            axis_1
        } else {
            Axis::new(axis_1.field, axis_1.min, axis_1.max, default_count, axis_1.scale)?
        };
        let axis_2 = if axes[1].is_empty() {
            None
        } else {
            Some(axis_from_json(&axes[1], DEFAULT_COUNT_2D)?)
        };
        let observables = match observables {
            None => vec![Observable::ECB2, Observable::EB1B2],
            Some(Value::Array(items)) => items
                .iter()
                .map(|o| {
                    o.as_str()
                        .ok_or_else(|| SweepError::Config("observables must be strings".to_owned()))?
                        .parse()
                })
                .collect::<Result<_, _>>()?,
            Some(_) => return Err(SweepError::Config("`observables` must be an array".to_owned())),
        };
        let spec = SweepSpec {
            base,
            axis_1,
            axis_2,
            observables,
            mode,
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn axis_from_json(
    obj: &serde_json::Map<String, Value>,
    default_count: usize,
) -> Result<Axis, SweepError> {
    let cfg = |m: String| SweepError::Config(m);
    let field: ParamField = obj
        .get("field")
        .and_then(Value::as_str)
        .ok_or_else(|| cfg("axis needs a string `field`".to_owned()))?
        .parse()?;
    let num = |key: &str| {
        obj.get(key)
            .and_then(Value::as_f64)
            .ok_or_else(|| cfg(format!("axis `{field}` needs a numeric `{key}`")))
    };
    let (min, max) = (num("min")?, num("max")?);
    let count = match obj.get("count") {
        None => default_count,
        Some(v) => v
            .as_u64()
            .ok_or_else(|| cfg(format!("axis `{field}`: `count` must be a non-negative integer")))?
            as usize,
    };
    let scale = match obj.get("scale").and_then(Value::as_str) {
        None if field == ParamField::Temperature => AxisScale::Log,
        None | Some("linear") => AxisScale::Linear,
        Some("log") => AxisScale::Log,
        Some(other) => return Err(cfg(format!("axis `{field}`: unknown scale `{other}`"))),
    };
    for key in obj.keys() {
        if !matches!(key.as_str(), "field" | "min" | "max" | "count" | "scale") {
            return Err(cfg(format!("axis `{field}`: unknown key `{key}`")));
        }
    }
    Axis::new(field, min, max, count, scale)
}

/// Why a point carries no entanglement values.
#[derive(Debug, Clone, PartialEq)]
pub enum PointStatus {
    Ok,
    Unstable,
    NonConvergence,
    InvalidParams(String),
    NumericalFailure(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<T = f64> {
    pub axis_values: Vec<f64>,
    pub status: PointStatus,
    pub stable: bool,
    pub max_real_part: Option<T>,
    /// One entry per [`SweepSpec::value_columns`].
    pub values: Vec<Option<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable<T = f64> {
    pub axes: Vec<Axis>,
    pub columns: Vec<Observable>,
    pub rows: Vec<SweepRow<T>>,
}

impl<T: Scalar> SweepTable<T> {
    pub fn header(&self) -> Vec<String> {
        self.axes
            .iter()
            .map(|a| a.field.name().to_owned())
            .chain(["stable".to_owned(), "max_real_part".to_owned()])
            .chain(self.columns.iter().map(|o| o.name().to_owned()))
            .collect()
    }

    pub fn column(&self, obs: Observable) -> Option<Vec<Option<T>>> {
        let idx = self.columns.iter().position(|&o| o == obs)?;
        Some(self.rows.iter().map(|r| r.values[idx]).collect())
    }
}

/// Entanglement of `pair`, or exactly zero when it involves an empty
/// collective mode (`M = 0` empties `B_1`, `M = N` empties `B_2`).
fn pair_is_empty<T>(params: &SystemParams<T>, pair: ModePair) -> bool {
    (params.m_split == 0 && pair.involves(Mode::Vib1))
        || (params.m_split == params.n_total && pair.involves(Mode::Vib2))
}

/// Full pipeline at one parameter point.
pub fn evaluate_point<T: Scalar>(
    params: &SystemParams<T>,
    mode: MeanFieldMode,
    columns: &[Observable],
) -> SweepRow<T> {
    let mut row = SweepRow {
        axis_values: Vec::new(),
        status: PointStatus::Ok,
        stable: false,
        max_real_part: None,
        values: vec![None; columns.len()],
    };
    let ss = match solve_mean_field(params, mode) {
        Ok(ss) => ss,
        Err(MeanFieldError::Params(e)) => {
            row.status = PointStatus::InvalidParams(e.to_string());
            return row;
        }
        Err(MeanFieldError::NonConvergence { .. }) => {
            row.status = PointStatus::NonConvergence;
            return row;
        }
        Err(e) => {
            row.status = PointStatus::NumericalFailure(e.to_string());
            return row;
        }
    };
    for (slot, obs) in row.values.iter_mut().zip(columns) {
        if *obs == Observable::DeltaCEff {
            *slot = Some(ss.delta_c_eff);
        }
    }
    let drift = build_drift(&ss, params);
    let report = match stability(&drift) {
        Ok(r) => r,
        Err(e) => {
            row.status = PointStatus::NumericalFailure(e.to_string());
            return row;
        }
    };
    row.max_real_part = Some(report.max_real_part);
    row.stable = report.stable;
    if !report.stable {
        row.status = PointStatus::Unstable;
        return row;
    }
    let diffusion = build_diffusion(params, params.derived().n_th);
    let v = match solve_lyapunov(&drift, &diffusion) {
        Ok(v) => v,
        Err(e) => {
            row.status = PointStatus::NumericalFailure(e.to_string());
            return row;
        }
    };
    for (slot, obs) in row.values.iter_mut().zip(columns) {
        let Some(pair) = obs.pair() else { continue };
        if pair_is_empty(params, pair) {
            *slot = Some(T::zero());
            continue;
        }
        match log_negativity(&extract_pair(&v, pair)) {
            Ok(e) => *slot = Some(e),
            Err(e) => row.status = PointStatus::NumericalFailure(e.to_string()),
        }
    }
    row
}

fn point_params<T: Scalar>(
    spec: &SweepSpec<T>,
    point: &[f64],
) -> Result<SystemParams<T>, ParamError> {
    let mut p = spec.base;
    for (axis, &x) in spec.axes().iter().zip(point) {
        p.set(axis.field, T::lit(x))?;
    }
    Ok(p)
}

fn evaluate_grid_point<T: Scalar>(spec: &SweepSpec<T>, columns: &[Observable], point: Vec<f64>) -> SweepRow<T> {
    let mut row = match point_params(spec, &point) {
        Ok(p) => evaluate_point(&p, spec.mode, columns),
        Err(e) => SweepRow {
            axis_values: Vec::new(),
            status: PointStatus::InvalidParams(e.to_string()),
            stable: false,
            max_real_part: None,
            values: vec![None; columns.len()],
        },
    };
    row.axis_values = point;
    row
}

/// Evaluates every grid point on the rayon pool; row order is the grid order.
pub fn run_sweep<T: Scalar>(spec: &SweepSpec<T>) -> Result<SweepTable<T>, SweepError> {
    spec.validate()?;
    let columns = spec.value_columns();
    let rows = spec
        .grid()
        .into_par_iter()
        .map(|pt| evaluate_grid_point(spec, &columns, pt))
        .collect();
    Ok(SweepTable {
        axes: spec.axes(),
        columns,
        rows,
    })
}

pub fn run_sweep_serial<T: Scalar>(spec: &SweepSpec<T>) -> Result<SweepTable<T>, SweepError> {
    spec.validate()?;
    let columns = spec.value_columns();
    let rows = spec
        .grid()
        .into_iter()
        .map(|pt| evaluate_grid_point(spec, &columns, pt))
        .collect();
    Ok(SweepTable {
        axes: spec.axes(),
        columns,
        rows,
    })
}

/// Round-trip exact: 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn format_axis(axis: &Axis, x: f64) -> String {
    if axis.field.is_integer() {
        format!("{}", x as u64)
    } else {
        format_float(x)
    }
}

/// Header row then one record per grid point. Unstable points leave the
/// entanglement cells empty.
pub fn emit_csv<T: Scalar, W: Write>(table: &SweepTable<T>, out: W) -> Result<(), SweepError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(table.header())?;
    let cell = |v: Option<T>| v.map(|x| format_float(x.as_f64())).unwrap_or_default();
    for row in &table.rows {
        let mut rec: Vec<String> = table
            .axes
            .iter()
            .zip(&row.axis_values)
            .map(|(a, &x)| format_axis(a, x))
            .collect();
        rec.push(row.stable.to_string());
        rec.push(cell(row.max_real_part));
        rec.extend(row.values.iter().zip(&table.columns).map(|(&v, &o)| {
            if o.pair().is_some() && !row.stable {
                String::new()
            } else {
                cell(v)
            }
        }));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Stable iff the mean field converges and the drift matrix is Hurwitz.
pub fn is_stable<T: Scalar>(params: &SystemParams<T>, mode: MeanFieldMode) -> bool {
    solve_mean_field(params, mode)
        .ok()
        .and_then(|ss| stability(&build_drift(&ss, params)).ok())
        .is_some_and(|r| r.stable)
}

/// First stable→unstable crossing of `field` in `[lo, hi]`: a uniform scan
/// with `samples` points locates the bracket, bisection refines it to `tol`.
/// `None` if every scanned point is stable or the start point is unstable.
pub fn stability_threshold(
    base: &SystemParams<f64>,
    field: ParamField,
    lo: f64,
    hi: f64,
    samples: usize,
    tol: f64,
    mode: MeanFieldMode,
) -> Result<Option<f64>, SweepError> {
    let stable_at = |x: f64| -> Result<bool, SweepError> { Ok(is_stable(&base.with(field, x)?, mode)) };
    if !stable_at(lo)? {
        return Ok(None);
    }
    let samples = samples.max(2);
    let mut prev = lo;
    for i in 1..samples {
        let x = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
        if !stable_at(x)? {
            let (mut a, mut b) = (prev, x);
            while b - a > tol {
                let mid = 0.5 * (a + b);
                if stable_at(mid)? {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            return Ok(Some(0.5 * (a + b)));
        }
        prev = x;
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn small_spec() -> SweepSpec<f64> {
        SweepSpec::new(
            SystemParams::default(),
            Axis::linear(ParamField::Drive, 10.0, 20.0, 2).unwrap(),
            vec![Observable::EB1B2],
        )
        .with_axis_2(Axis::linear(ParamField::LambdaOpa, 0.0, 0.2, 2).unwrap())
    }

    #[test]
    fn linear_and_log_axes() {
        let a = Axis::linear(ParamField::Theta, 0.0, 1.0, 5).unwrap();
        assert_eq!(a.values(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let a = Axis::log(ParamField::Temperature, 1.0, 1000.0, 4).unwrap();
        let v = a.values();
        assert_eq!(v[0], 1.0);
        assert!((v[1] - 10.0).abs() < 1e-12 && (v[2] - 100.0).abs() < 1e-10);
        assert_eq!(v[3], 1000.0);
        assert!(Axis::log(ParamField::Temperature, 0.0, 1.0, 3).is_err());
        assert!(Axis::linear(ParamField::Theta, 0.0, 1.0, 1).is_err());
        assert!(Axis::linear(ParamField::Theta, 2.0, 1.0, 3).is_err());
    }

    #[test]
    fn integer_axes_are_clipped() {
        let a = Axis::linear(ParamField::MSplit, 0.0, 100.0, 1000).unwrap();
        assert_eq!(a.count, 101);
        assert_eq!(a.values(), (0..=100).map(f64::from).collect::<Vec<_>>());
        let a = Axis::linear(ParamField::NTotal, 1.0, 10.0, 4).unwrap();
        assert_eq!(a.values(), vec![1.0, 4.0, 7.0, 10.0]);
        let a = Axis::linear(ParamField::NTotal, 0.5, 3.7, 50).unwrap();
        assert_eq!(a.values(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn grid_order_axis_two_fastest() {
        let g = small_spec().grid();
        assert_eq!(
            g,
            vec![vec![10.0, 0.0], vec![10.0, 0.2], vec![20.0, 0.0], vec![20.0, 0.2]]
        );
    }

    #[test]
    fn two_by_two_csv_has_five_lines() {
        let t = run_sweep(&small_spec()).unwrap();
        let mut buf = Vec::new();
        emit_csv(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], "drive,lambda_opa,stable,max_real_part,E_B1B2");
        assert!(lines[1].starts_with("1.0000000000000000e1,0.0000000000000000e0,true,"));
    }

    #[test]
    fn single_point_axis_gives_identical_rows() {
        let spec = SweepSpec::<f64>::new(
            SystemParams::default(),
            Axis::linear(ParamField::Drive, 16.0, 16.0, 2).unwrap(),
            vec![Observable::ECB2, Observable::EB1B2],
        );
        let t = run_sweep(&spec).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[0], t.rows[1]);
    }

    #[test]
    fn unstable_points_are_masked() {
        let spec = SweepSpec::<f64>::new(
            SystemParams::default(),
            Axis::linear(ParamField::LambdaOpa, 0.2, 0.5, 2).unwrap(),
            vec![Observable::Stability, Observable::ECB2],
        );
        let t = run_sweep(&spec).unwrap();
        assert_eq!(t.columns, vec![Observable::ECB2]);
        assert!(t.rows[0].stable && t.rows[0].values[0].is_some());
        assert!(!t.rows[1].stable && t.rows[1].values[0].is_none());
        assert_eq!(t.rows[1].status, PointStatus::Unstable);
        let mut buf = Vec::new();
        emit_csv(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let masked = text.lines().nth(2).unwrap();
        assert!(masked.contains(",false,") && masked.ends_with(','), "{masked}");
    }

    #[test]
    fn empty_collective_mode_gives_zero() {
        let cols = [Observable::ECB1, Observable::ECB2, Observable::EB1B2];
        for (m, zero_idx) in [(0u64, [0usize, 2]), (100, [1, 2])] {
            let p = SystemParams::<f64> {
                m_split: m,
                ..Default::default()
            };
            let row = evaluate_point(&p, MeanFieldMode::Paper, &cols);
            assert!(row.stable);
            for i in zero_idx {
                assert_eq!(row.values[i], Some(0.0));
            }
        }
    }

    #[test]
    fn invalid_point_is_recorded_not_fatal() {
        let spec = SweepSpec::<f64>::new(
            SystemParams::default(),
            Axis::linear(ParamField::NTotal, 40.0, 60.0, 3).unwrap(),
            vec![Observable::ECB2],
        );
        let t = run_sweep(&spec).unwrap();
        assert!(matches!(t.rows[0].status, PointStatus::InvalidParams(_)));
        assert_eq!(t.rows[2].status, PointStatus::Ok);
    }

    #[test]
    fn json_config_nested_and_dotted() {
        let nested = json!({
            "drive": 16.0,
            "axis1": {"field": "m_split", "min": 0, "max": 100, "count": 11},
            "observables": ["E_cB2", "E_B1B2"],
            "mode": "exact"
        });
        let spec = SweepSpec::from_json_value(&nested).unwrap();
        assert_eq!(spec.axis_1.field, ParamField::MSplit);
        assert_eq!(spec.axis_1.count, 11);
        assert_eq!(spec.mode, MeanFieldMode::Exact);
        let dotted = json!({
            "axis1.field": "drive", "axis1.min": 0.0, "axis1.max": 60.0,
            "axis2.field": "lambda_opa", "axis2.min": 0.0, "axis2.max": 0.5,
            "observables": ["stability"]
        });
        let spec = SweepSpec::from_json_value(&dotted).unwrap();
        assert_eq!(spec.axis_1.count, DEFAULT_COUNT_2D);
        assert_eq!(spec.axis_2.unwrap().count, DEFAULT_COUNT_2D);
        let temp = json!({"axis1": {"field": "temperature", "min": 1.0, "max": 2000.0}});
        let spec = SweepSpec::from_json_value(&temp).unwrap();
        assert_eq!(spec.axis_1.scale, AxisScale::Log);
        assert_eq!(spec.axis_1.count, DEFAULT_COUNT_1D);
        assert!(SweepSpec::from_json_value(&json!({"axis1": {"field": "nope", "min": 0, "max": 1}})).is_err());
        assert!(SweepSpec::from_json_value(&json!({"observables": ["E_cB2"]})).is_err());
        assert!(SweepSpec::from_json_value(&json!({
            "axis1": {"field": "drive", "min": 0, "max": 1}, "observables": ["E_ac"]
        }))
        .is_err());
    }

    #[test]
    fn bisection_brackets_gain_threshold() {
        let p = SystemParams::default();
        let t = stability_threshold(&p, ParamField::LambdaOpa, 0.0, 0.5, 11, 1e-4, MeanFieldMode::Paper)
            .unwrap()
            .unwrap();
        assert!(is_stable(&p.with(ParamField::LambdaOpa, t - 1e-3).unwrap(), MeanFieldMode::Paper));
        assert!(!is_stable(&p.with(ParamField::LambdaOpa, t + 1e-3).unwrap(), MeanFieldMode::Paper));
    }

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.0] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
    }
}
