use std::f64::consts::PI;
use std::io::Write;

use ndarray::{concatenate, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::heterogeneity::{uniform_grid_1d, ChebyshevFunction};
use crate::solvers::{antiderivative, solve_burgers, solve_dr_time, BurgersParams, DrTimeParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    Antiderivative,
    Dr,
    Burgers,
}

impl OperatorKind {
    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::Antiderivative => "antiderivative",
            OperatorKind::Dr => "dr",
            OperatorKind::Burgers => "burgers",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [OperatorKind::Antiderivative, OperatorKind::Dr, OperatorKind::Burgers].into_iter().find(|k| k.name() == name)
    }

    pub fn query_dim(self) -> usize {
        match self {
            OperatorKind::Antiderivative => 1,
            OperatorKind::Dr | OperatorKind::Burgers => 2,
        }
    }
}

/// Sorted, distinct sensor locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorGrid {
    locations: Vec<f64>,
}

impl SensorGrid {
    pub fn new(locations: Vec<f64>) -> Result<Self> {
        if locations.len() < 2 {
            return Err(Error::usage("a sensor grid needs at least two sensors"));
        }
        if locations.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::usage("sensor locations must be sorted and distinct"));
        }
        Ok(SensorGrid { locations })
    }

    /// `m` equispaced sensors on `[0, 1]`.
    pub fn uniform(m: usize) -> Result<Self> {
        Self::new(uniform_grid_1d(0.0, 1.0, m))
    }

    /// `m` sensors `i/m` on the periodic unit interval.
    pub fn periodic(m: usize) -> Result<Self> {
        Self::new((0..m).map(|i| i as f64 / m as f64).collect())
    }

    pub fn locations(&self) -> &[f64] {
        &self.locations
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    fn sample(&self, v: impl Fn(f64) -> f64) -> Vec<f64> {
        self.locations.iter().map(|&x| v(x)).collect()
    }
}

/// Dense pairing of every input function with every query point.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorDataset {
    pub kind: OperatorKind,
    pub sensors: SensorGrid,
    /// `Q × d` query coordinates.
    pub queries: Array2<f64>,
    /// `F × m` sensor values.
    pub inputs: Array2<f64>,
    /// `F × Q` targets `u(ξ)`.
    pub targets: Array2<f64>,
    pub function_ids: Vec<usize>,
}

impl OperatorDataset {
    fn from_rows(
        kind: OperatorKind,
        sensors: SensorGrid,
        queries: Vec<Vec<f64>>,
        rows: Vec<(Vec<f64>, Vec<f64>)>,
    ) -> Result<Self> {
        let m = sensors.len();
        let q = queries.len();
        let d = kind.query_dim();
        let f = rows.len();
        let queries = Array2::from_shape_vec((q, d), queries.concat()).map_err(|e| Error::usage(e.to_string()))?;
        let mut inputs = Array2::zeros((f, m));
        let mut targets = Array2::zeros((f, q));
        for (i, (v, u)) in rows.into_iter().enumerate() {
            inputs.row_mut(i).assign(&ndarray::ArrayView1::from(&v));
            targets.row_mut(i).assign(&ndarray::ArrayView1::from(&u));
        }
        Ok(OperatorDataset { kind, sensors, queries, inputs, targets, function_ids: (0..f).collect() })
    }

    pub fn num_functions(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn num_queries(&self) -> usize {
        self.queries.nrows()
    }

    /// Functions of several datasets sharing sensors and queries, in order.
    pub fn concat(parts: &[&OperatorDataset]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::usage("nothing to concatenate"))?;
        if parts.iter().any(|p| p.sensors != first.sensors || p.queries != first.queries || p.kind != first.kind) {
            return Err(Error::usage("datasets differ in sensors, queries or kind"));
        }
        let inputs = concatenate(Axis(0), &parts.iter().map(|p| p.inputs.view()).collect::<Vec<_>>())
            .map_err(|e| Error::usage(e.to_string()))?;
        let targets = concatenate(Axis(0), &parts.iter().map(|p| p.targets.view()).collect::<Vec<_>>())
            .map_err(|e| Error::usage(e.to_string()))?;
        let function_ids = parts.iter().flat_map(|p| p.function_ids.iter().copied()).collect();
        Ok(OperatorDataset { kind: first.kind, sensors: first.sensors.clone(), queries: first.queries.clone(), inputs, targets, function_ids })
    }

    /// Sensor-value vectors, one per function (the points W1 is measured on).
    pub fn input_points(&self) -> Vec<Vec<f64>> {
        self.inputs.rows().into_iter().map(|r| r.to_vec()).collect()
    }

    /// One row per (function, query): `function_id, s0.., xi0.., u`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["function_id".to_string()];
        header.extend((0..self.sensors.len()).map(|j| format!("s{j}")));
        header.extend((0..self.queries.ncols()).map(|j| format!("xi{j}")));
        header.push("u".into());
        out.write_record(&header)?;
        for (f, id) in self.function_ids.iter().enumerate() {
            for q in 0..self.num_queries() {
                let mut rec = vec![id.to_string()];
                rec.extend(self.inputs.row(f).iter().map(|v| format!("{v:e}")));
                rec.extend(self.queries.row(q).iter().map(|v| format!("{v:e}")));
                rec.push(format!("{:e}", self.targets[[f, q]]));
                out.write_record(&rec)?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// `u(x) = ∫₀ˣ v` by adaptive RK45 at every query.
pub fn build_antiderivative_dataset(
    functions: &[ChebyshevFunction],
    sensors: &SensorGrid,
    queries: &[f64],
) -> Result<OperatorDataset> {
    if sensors.locations().iter().chain(queries).any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::usage("antiderivative sensors and queries must lie in [0, 1]"));
    }
    let rows = functions
        .iter()
        .map(|v| Ok((sensors.sample(|x| v.eval(x)), antiderivative(|x| v.eval(x), queries)?)))
        .collect::<Result<Vec<_>>>()?;
    OperatorDataset::from_rows(
        OperatorKind::Antiderivative,
        sensors.clone(),
        queries.iter().map(|&x| vec![x]).collect(),
        rows,
    )
}

fn mesh_queries(xs: &[f64], times: &[f64], stride: usize) -> (Vec<(usize, usize)>, Vec<Vec<f64>>) {
    let mut idx = Vec::new();
    let mut pts = Vec::new();
    for (k, &t) in times.iter().enumerate().step_by(stride) {
        for (i, &x) in xs.iter().enumerate().step_by(stride) {
            idx.push((k, i));
            pts.push(vec![x, t]);
        }
    }
    (idx, pts)
}

/// Source-to-solution map of `u_t = D u_xx + k u² + v(x)`; queries are the
/// solver mesh `(x, t)` thinned by `stride`.
pub fn build_dr_dataset(
    functions: &[ChebyshevFunction],
    sensors: &SensorGrid,
    params: DrTimeParams,
    stride: usize,
) -> Result<OperatorDataset> {
    if stride == 0 {
        return Err(Error::usage("query stride must be at least 1"));
    }
    let mut rows = Vec::with_capacity(functions.len());
    let mut queries = None;
    for v in functions {
        let sol = solve_dr_time(|x, _| v.eval(x), params)?.solution;
        let (idx, pts) = mesh_queries(&sol.xs, &sol.times, stride);
        queries.get_or_insert(pts);
        rows.push((sensors.sample(|x| v.eval(x)), idx.iter().map(|&(k, i)| sol.u[k][i]).collect()));
    }
    let queries = match queries {
        Some(q) => q,
        None => {
            let xs = uniform_grid_1d(0.0, 1.0, params.nx);
            let ts = uniform_grid_1d(0.0, params.t_end, params.nt);
            mesh_queries(&xs, &ts, stride).1
        }
    };
    OperatorDataset::from_rows(OperatorKind::Dr, sensors.clone(), queries, rows)
}

/// `ṽ(x) = p(cos 2πx)`: smooth, 1-periodic, same Chebyshev coefficients.
pub fn periodize(p: &ChebyshevFunction) -> impl Fn(f64) -> f64 + '_ {
    move |x| p.eval((2.0 * PI * x).cos())
}

/// Initial-condition-to-solution map of viscous Burgers on the periodic
/// unit interval; queries are the solver grid thinned by `stride`.
pub fn build_burgers_dataset(
    functions: &[ChebyshevFunction],
    sensors: &SensorGrid,
    params: BurgersParams,
    stride: usize,
) -> Result<OperatorDataset> {
    if stride == 0 {
        return Err(Error::usage("query stride must be at least 1"));
    }
    let xs: Vec<f64> = (0..params.nx).map(|i| i as f64 / params.nx as f64).collect();
    let ts = uniform_grid_1d(0.0, params.t_end, params.nt);
    let (idx, pts) = mesh_queries(&xs, &ts, stride);
    let rows = functions
        .iter()
        .map(|p| {
            let v = periodize(p);
            let init: Vec<f64> = xs.iter().map(|&x| v(x)).collect();
            let sol = solve_burgers(&init, params)?.solution;
            Ok((sensors.sample(&v), idx.iter().map(|&(k, i)| sol.u[k][i]).collect()))
        })
        .collect::<Result<Vec<_>>>()?;
    OperatorDataset::from_rows(OperatorKind::Burgers, sensors.clone(), pts, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heterogeneity::{sample_chebyshev, ChebyshevSpaceSpec};
    use crate::rng::{stream, Stream};

    fn basis(k: usize) -> ChebyshevFunction {
        let mut c = vec![0.0; k + 1];
        c[k] = 1.0;
        ChebyshevFunction::new(c)
    }

    #[test]
    fn sensor_grid_validation() {
        assert!(SensorGrid::new(vec![0.0]).is_err());
        assert!(SensorGrid::new(vec![0.0, 0.0]).is_err());
        assert!(SensorGrid::new(vec![0.5, 0.1]).is_err());
        assert_eq!(SensorGrid::uniform(50).unwrap().len(), 50);
    }

    #[test]
    fn antiderivative_examples() {
        let sensors = SensorGrid::uniform(5).unwrap();
        let queries = [0.0, 0.25, 0.5, 1.0];
        let d = build_antiderivative_dataset(&[basis(0), basis(1)], &sensors, &queries).unwrap();
        for (j, &x) in queries.iter().enumerate() {
            assert!((d.targets[[0, j]] - x).abs() < 1e-12);
        }
        assert!((d.targets[[1, 2]] - 0.125).abs() < 1e-12);
        assert!((d.targets[[1, 3]] - 0.5).abs() < 1e-12);
        assert_eq!(d.inputs.row(1).to_vec(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(build_antiderivative_dataset(&[basis(0)], &sensors, &[1.5]).is_err());
    }

    #[test]
    fn dr_examples() {
        let sensors = SensorGrid::uniform(10).unwrap();
        let p = DrTimeParams { nx: 21, nt: 21, ..Default::default() };
        let zero = ChebyshevFunction::new(vec![0.0; 3]);
        let d = build_dr_dataset(&[zero, basis(2)], &sensors, p, 1).unwrap();
        assert!(d.targets.row(0).iter().all(|v| v.abs() < 1e-10));
        for (q, pt) in d.queries.rows().into_iter().enumerate() {
            if pt[1] == 0.0 {
                assert_eq!(d.targets[[1, q]], 0.0);
            }
        }
    }

    #[test]
    fn dr_sign_flip_without_reaction() {
        let sensors = SensorGrid::uniform(4).unwrap();
        let p = DrTimeParams { k: 0.0, nx: 21, nt: 11, ..Default::default() };
        let v = ChebyshevFunction::new(vec![0.3, -0.5, 0.8]);
        let neg = ChebyshevFunction::new(vec![-0.3, 0.5, -0.8]);
        let a = build_dr_dataset(&[v], &sensors, p, 2).unwrap();
        let b = build_dr_dataset(&[neg], &sensors, p, 2).unwrap();
        for (x, y) in a.targets.iter().zip(b.targets.iter()) {
            assert!((x + y).abs() < 1e-12);
        }
    }

    #[test]
    fn burgers_examples() {
        let sensors = SensorGrid::periodic(8).unwrap();
        let p = BurgersParams { nt: 11, ..Default::default() };
        let constant = ChebyshevFunction::new(vec![0.4]);
        let d = build_burgers_dataset(&[constant], &sensors, p, 1).unwrap();
        assert!(d.targets.iter().all(|v| (v - 0.4).abs() < 1e-12));

        let v = ChebyshevFunction::new(vec![0.1, 0.5, -0.3]);
        let d = build_burgers_dataset(&[v], &sensors, p, 1).unwrap();
        let nx = p.nx;
        let row = d.targets.row(0);
        let mean = |k: usize| row.iter().skip(k * nx).take(nx).sum::<f64>() / nx as f64;
        let sup = |k: usize| row.iter().skip(k * nx).take(nx).fold(0.0f64, |a, v| a.max(v.abs()));
        for k in 1..p.nt {
            assert!((mean(k) - mean(0)).abs() < 1e-8);
        }
        assert!(sup(p.nt - 1) < sup(0));
    }

    #[test]
    fn periodized_inputs_are_periodic() {
        let f = ChebyshevFunction::new(vec![0.2, -0.7, 0.4, 0.9]);
        let v = periodize(&f);
        assert!((v(0.0) - v(1.0)).abs() < 1e-12);
        assert!((v(0.13) - v(1.13)).abs() < 1e-12);
    }

    #[test]
    fn deterministic_and_csv() {
        let spec = ChebyshevSpaceSpec::full(10);
        let fs = sample_chebyshev(&spec, &mut stream(3, Stream::Sampling, 0), 2);
        let again = sample_chebyshev(&spec, &mut stream(3, Stream::Sampling, 0), 2);
        let sensors = SensorGrid::uniform(3).unwrap();
        let a = build_antiderivative_dataset(&fs, &sensors, &[0.5, 1.0]).unwrap();
        let b = build_antiderivative_dataset(&again, &sensors, &[0.5, 1.0]).unwrap();
        assert_eq!(a, b);
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("function_id,s0,s1,s2,xi0,u\n"));
        assert_eq!(text.lines().count(), 5);
        let both = OperatorDataset::concat(&[&a, &b]).unwrap();
        assert_eq!(both.num_functions(), 4);
    }
}
