use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::signal::{AlignedSchedule, MeteringSignal};
use crate::dynamics::{Domain, Evaluator, Field};
use crate::error::SimulationError;
use crate::network::Network;

pub const DEFAULT_DT: f64 = 0.01;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    Euler,
    #[default]
    Rk4,
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "euler" => Ok(Method::Euler),
            "rk4" => Ok(Method::Rk4),
            other => Err(format!("unknown method `{other}` (expected euler or rk4)")),
        }
    }
}

/// Integration settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integration {
    pub field: Field,
    pub method: Method,
    pub dt: f64,
    pub t_end: f64,
    /// Record every `stride`-th grid point (the final point is always kept).
    pub stride: usize,
}

impl Integration {
    pub fn new(t_end: f64, dt: f64) -> Self {
        Self {
            field: Field::Fifo,
            method: Method::Rk4,
            dt,
            t_end,
            stride: 1,
        }
    }

    pub fn method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn field(mut self, field: Field) -> Self {
        self.field = field;
        self
    }

    pub fn stride(mut self, stride: usize) -> Self {
        self.stride = stride.max(1);
        self
    }
}

/// Fixed-step integrator that advances one grid step at a time.
pub struct Stepper<'a> {
    ev: Evaluator<'a>,
    schedule: AlignedSchedule,
    field: Field,
    method: Method,
    step: usize,
    x: Vec<f64>,
    jam: Vec<f64>,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
    max_clamp: f64,
}

impl<'a> Stepper<'a> {
    pub fn new(
        net: &'a Network,
        x0: &[f64],
        signal: &MeteringSignal,
        field: Field,
        method: Method,
        dt: f64,
    ) -> Result<Self, SimulationError> {
        net.check_state(x0)?;
        signal.check(net)?;
        let n = net.num_links();
        Ok(Self {
            ev: Evaluator::new(net),
            schedule: signal.align(dt)?,
            field,
            method,
            step: 0,
            x: x0.to_vec(),
            jam: net.jam(),
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            max_clamp: 0.0,
        })
    }

    /// Effective step size after grid alignment.
    pub fn dt(&self) -> f64 {
        self.schedule.dt
    }

    pub fn steps_per_period(&self) -> Option<usize> {
        self.schedule.steps_per_period
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.schedule.dt
    }

    pub fn state(&self) -> &[f64] {
        &self.x
    }

    /// Largest amount any component was moved by the box clamp so far.
    pub fn max_clamp(&self) -> f64 {
        self.max_clamp
    }

    /// Domain of the current state.
    pub fn domain(&mut self) -> Domain {
        self.ev.domain(&self.x)
    }

    pub fn advance(&mut self) -> Result<(), SimulationError> {
        let dt = self.schedule.dt;
        let u = self.schedule.input(self.step);
        let (ev, x, tmp, field) = (&mut self.ev, &mut self.x, &mut self.tmp, self.field);
        let [k1, k2, k3, k4] = &mut self.k;
        match self.method {
            Method::Euler => {
                ev.rates_into(x, u, field, k1);
                for (xi, ki) in x.iter_mut().zip(k1.iter()) {
                    *xi += dt * ki;
                }
            }
            Method::Rk4 => {
                ev.rates_into(x, u, field, k1);
                axpy(tmp, x, 0.5 * dt, k1);
                ev.rates_into(tmp, u, field, k2);
                axpy(tmp, x, 0.5 * dt, k2);
                ev.rates_into(tmp, u, field, k3);
                axpy(tmp, x, dt, k3);
                ev.rates_into(tmp, u, field, k4);
                for i in 0..x.len() {
                    x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
        }
        self.step += 1;
        for (xi, &jam) in self.x.iter_mut().zip(&self.jam) {
            if !xi.is_finite() {
                return Err(SimulationError::Diverged {
                    time: self.step as f64 * dt,
                });
            }
            let clamped = xi.clamp(0.0, jam);
            self.max_clamp = self.max_clamp.max((clamped - *xi).abs());
            *xi = clamped;
        }
        Ok(())
    }
}

fn axpy(out: &mut [f64], x: &[f64], a: f64, k: &[f64]) {
    for ((o, xi), ki) in out.iter_mut().zip(x).zip(k) {
        *o = xi + a * ki;
    }
}

/// Number of grid steps needed to reach `t_end`.
pub fn steps_for(t_end: f64, dt: f64) -> Result<usize, SimulationError> {
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(SimulationError::BadHorizon(t_end));
    }
    Ok((t_end / dt - 1e-9).ceil().max(0.0) as usize)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub field: Field,
    pub method: Method,
    pub dt: f64,
    pub stride: usize,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub max_clamp: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states
            .last()
            .expect("a trajectory holds at least its initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self
            .times
            .last()
            .expect("a trajectory holds at least its initial state")
    }

    pub fn write_csv<W: Write>(&self, net: &Network, out: W) -> std::io::Result<()> {
        write_csv(net, &self.times, &self.states, out)
    }
}

/// Writes `t,x_<id>,...` rows.
pub fn write_csv<W: Write>(net: &Network, times: &[f64], states: &[Vec<f64>], mut out: W) -> std::io::Result<()> {
    write!(out, "t")?;
    for l in net.links() {
        write!(out, ",x_{}", l.id)?;
    }
    writeln!(out)?;
    for (t, x) in times.iter().zip(states) {
        write!(out, "{t}")?;
        for v in x {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    out.flush()
}

pub fn integrate(
    net: &Network,
    x0: &[f64],
    signal: &MeteringSignal,
    opts: &Integration,
) -> Result<Trajectory, SimulationError> {
    let mut st = Stepper::new(net, x0, signal, opts.field, opts.method, opts.dt)?;
    let steps = steps_for(opts.t_end, st.dt())?;
    let stride = opts.stride.max(1);
    let mut times = vec![0.0];
    let mut states = vec![x0.to_vec()];
    for k in 1..=steps {
        st.advance()?;
        if k % stride == 0 || k == steps {
            times.push(st.time());
            states.push(st.state().to_vec());
        }
    }
    Ok(Trajectory {
        field: opts.field,
        method: opts.method,
        dt: st.dt(),
        stride,
        times,
        states,
        max_clamp: st.max_clamp(),
    })
}

/// Whether every recorded state within the final `window` time units lies
/// within `tol` (l1) of `target`. A window longer than the trajectory covers
/// all of it.
pub fn converged_to(traj: &Trajectory, target: &[f64], tol: f64, window: f64) -> bool {
    let from = traj.final_time() - window - 1e-9 * window.max(1.0);
    traj.times
        .iter()
        .zip(&traj.states)
        .filter(|(t, _)| **t >= from)
        .all(|(_, x)| crate::l1_distance(x, target) <= tol)
}
