//! Random telegraph fluctuator: configuration, sampling, and exact queries.
//!
//! A realization is stored as an initial sign plus the ordered switch times of
//! each sign channel, so field values and phase integrals are exact and the
//! propagators can step from event to event. In [`CorrelationMode::InPhase`]
//! one channel drives all three field components; in
//! [`CorrelationMode::Independent`] each component has its own channel.
//!
//! Random streams are keyed by `(seed, realization index)` through the
//! ChaCha stream selector, so a given realization is the same no matter which
//! thread draws it or in which order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrelationMode {
    /// One sign process multiplies `(b_x, b_y, b_z)`.
    InPhase,
    /// Each component switches on its own, statistically independent of the others.
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    X,
    Y,
    Z,
}

/// Static fluctuator parameters. Fields are angular frequencies, `tau` is the
/// mean time between switches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluctuatorConfig {
    pub b_x: f64,
    pub b_y: f64,
    pub b_z: f64,
    pub tau: f64,
    pub mode: CorrelationMode,
}

impl FluctuatorConfig {
    pub fn new(b_x: f64, b_y: f64, b_z: f64, tau: f64, mode: CorrelationMode) -> Result<Self> {
        let cfg = Self {
            b_x,
            b_y,
            b_z,
            tau,
            mode,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("b_x", self.b_x), ("b_y", self.b_y), ("b_z", self.b_z)] {
            ensure_finite(name, v)?;
            if v < 0.0 {
                return Err(Error::Parameter(format!(
                    "{name} is an amplitude and must be non-negative, got {v}"
                )));
            }
        }
        ensure_finite("tau", self.tau)?;
        if self.tau <= 0.0 {
            return Err(Error::Parameter(format!(
                "switching time tau must be positive, got {}",
                self.tau
            )));
        }
        Ok(())
    }

    pub fn channel_count(&self) -> usize {
        match self.mode {
            CorrelationMode::InPhase => 1,
            CorrelationMode::Independent => 3,
        }
    }

    pub fn amplitude(&self, c: Component) -> f64 {
        match c {
            Component::X => self.b_x,
            Component::Y => self.b_y,
            Component::Z => self.b_z,
        }
    }
}

fn channel_index(mode: CorrelationMode, c: Component) -> usize {
    match (mode, c) {
        (CorrelationMode::InPhase, _) => 0,
        (CorrelationMode::Independent, Component::X) => 0,
        (CorrelationMode::Independent, Component::Y) => 1,
        (CorrelationMode::Independent, Component::Z) => 2,
    }
}

/// One telegraph sign process on `[0, t_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignChannel {
    initial_sign: f64,
    switch_times: Vec<f64>,
}

impl SignChannel {
    pub fn new(initial_sign: f64, switch_times: Vec<f64>) -> Result<Self> {
        if initial_sign != 1.0 && initial_sign != -1.0 {
            return Err(Error::Parameter(format!(
                "initial sign must be +1 or -1, got {initial_sign}"
            )));
        }
        if switch_times.iter().any(|t| !t.is_finite() || *t <= 0.0) {
            return Err(Error::Parameter("switch times must be finite and positive".into()));
        }
        if switch_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parameter("switch times must be strictly increasing".into()));
        }
        Ok(Self {
            initial_sign,
            switch_times,
        })
    }

    pub fn initial_sign(&self) -> f64 {
        self.initial_sign
    }

    pub fn switch_times(&self) -> &[f64] {
        &self.switch_times
    }

    /// Number of switches at times `<= t`.
    pub fn flips_until(&self, t: f64) -> usize {
        self.switch_times.partition_point(|&s| s <= t)
    }

    pub fn sign_at(&self, t: f64) -> f64 {
        if self.flips_until(t).is_multiple_of(2) {
            self.initial_sign
        } else {
            -self.initial_sign
        }
    }

    /// Exact `∫_{t1}^{t2} s(t) dt` for `t1 <= t2`.
    pub fn integral(&self, t1: f64, t2: f64) -> f64 {
        let start = self.flips_until(t1);
        let mut sign = if start.is_multiple_of(2) {
            self.initial_sign
        } else {
            -self.initial_sign
        };
        let mut acc = 0.0;
        let mut left = t1;
        for &s in &self.switch_times[start..] {
            if s >= t2 {
                break;
            }
            acc += sign * (s - left);
            left = s;
            sign = -sign;
        }
        acc + sign * (t2 - left)
    }

    fn flipped(&self) -> Self {
        Self {
            initial_sign: -self.initial_sign,
            switch_times: self.switch_times.clone(),
        }
    }
}

/// A sampled fluctuator trajectory on `[0, t_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRealization {
    t_max: f64,
    mode: CorrelationMode,
    channels: Vec<SignChannel>,
}

impl NoiseRealization {
    pub fn new(t_max: f64, mode: CorrelationMode, channels: Vec<SignChannel>) -> Result<Self> {
        ensure_finite("t_max", t_max)?;
        if t_max < 0.0 {
            return Err(Error::Parameter(format!("t_max must be >= 0, got {t_max}")));
        }
        let expected = match mode {
            CorrelationMode::InPhase => 1,
            CorrelationMode::Independent => 3,
        };
        if channels.len() != expected {
            return Err(Error::Parameter(format!(
                "{mode:?} realizations carry {expected} channel(s), got {}",
                channels.len()
            )));
        }
        if channels
            .iter()
            .any(|c| c.switch_times.last().is_some_and(|&s| s >= t_max))
        {
            return Err(Error::Parameter("switch times must lie below t_max".into()));
        }
        Ok(Self {
            t_max,
            mode,
            channels,
        })
    }

    /// A realization with no switches at all.
    pub fn constant(t_max: f64, mode: CorrelationMode, sign: f64) -> Result<Self> {
        let n = match mode {
            CorrelationMode::InPhase => 1,
            CorrelationMode::Independent => 3,
        };
        let channels = (0..n)
            .map(|_| SignChannel::new(sign, Vec::new()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(t_max, mode, channels)
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn mode(&self) -> CorrelationMode {
        self.mode
    }

    pub fn channels(&self) -> &[SignChannel] {
        &self.channels
    }

    pub fn channel(&self, c: Component) -> &SignChannel {
        &self.channels[channel_index(self.mode, c)]
    }

    pub fn sign(&self, c: Component, t: f64) -> f64 {
        self.channel(c).sign_at(t)
    }

    /// Sorted, de-duplicated switch times of the given components inside `(t1, t2)`.
    pub fn events_between(&self, components: &[Component], t1: f64, t2: f64) -> Vec<f64> {
        let mut idx: Vec<usize> = components
            .iter()
            .map(|&c| channel_index(self.mode, c))
            .collect();
        idx.sort_unstable();
        idx.dedup();
        let mut out: Vec<f64> = Vec::new();
        for i in idx {
            let ch = &self.channels[i];
            let start = ch.flips_until(t1);
            out.extend(ch.switch_times[start..].iter().take_while(|&&s| s < t2));
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// The same switch times with every initial sign reversed.
    pub fn with_flipped_signs(&self) -> Self {
        Self {
            t_max: self.t_max,
            mode: self.mode,
            channels: self.channels.iter().map(SignChannel::flipped).collect(),
        }
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.t_max).contains(&t) {
            return Err(Error::Range(format!(
                "time {t} outside realization span [0, {}]",
                self.t_max
            )));
        }
        Ok(())
    }
}

/// Deterministic generator for realization `index` of the ensemble `seed`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn sample_channel<R: Rng + ?Sized>(
    rng: &mut R,
    intervals: &Exp<f64>,
    t_max: f64,
) -> Result<SignChannel> {
    let initial_sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let mut switch_times = Vec::new();
    let mut t = 0.0;
    loop {
        t += intervals.sample(rng);
        if t >= t_max {
            break;
        }
        // A zero-length draw would break strict ordering; it has probability ~0.
        if switch_times.last().is_some_and(|&last| t <= last) || t <= 0.0 {
            continue;
        }
        switch_times.push(t);
    }
    SignChannel::new(initial_sign, switch_times)
}

/// Draw one realization. Inter-switch intervals are exponential with mean
/// `tau`; each channel starts in `+1` or `-1` with equal probability.
pub fn sample_realization<R: Rng + ?Sized>(
    cfg: &FluctuatorConfig,
    t_max: f64,
    rng: &mut R,
) -> Result<NoiseRealization> {
    cfg.validate()?;
    ensure_finite("t_max", t_max)?;
    if t_max < 0.0 {
        return Err(Error::Parameter(format!("t_max must be >= 0, got {t_max}")));
    }
    let intervals =
        Exp::new(1.0 / cfg.tau).map_err(|e| Error::Parameter(format!("tau: {e}")))?;
    let channels = (0..cfg.channel_count())
        .map(|_| sample_channel(rng, &intervals, t_max))
        .collect::<Result<Vec<_>>>()?;
    NoiseRealization::new(t_max, cfg.mode, channels)
}

/// Realization `index` of ensemble `seed`.
pub fn sample_keyed(
    cfg: &FluctuatorConfig,
    t_max: f64,
    seed: u64,
    index: u64,
) -> Result<NoiseRealization> {
    sample_realization(cfg, t_max, &mut stream_rng(seed, index))
}

/// `(b_x(t), b_y(t), b_z(t))` for the realization.
pub fn field_at(real: &NoiseRealization, cfg: &FluctuatorConfig, t: f64) -> Result<[f64; 3]> {
    real.check_time(t)?;
    Ok([
        cfg.b_x * real.sign(Component::X, t),
        cfg.b_y * real.sign(Component::Y, t),
        cfg.b_z * real.sign(Component::Z, t),
    ])
}

/// Exact phase `∫_{t1}^{t2} b_z(t') dt'`.
pub fn integrate_bz(
    real: &NoiseRealization,
    cfg: &FluctuatorConfig,
    t1: f64,
    t2: f64,
) -> Result<f64> {
    real.check_time(t1)?;
    real.check_time(t2)?;
    if t1 > t2 {
        return Err(Error::Range(format!(
            "integration bounds reversed: {t1} > {t2}"
        )));
    }
    Ok(cfg.b_z * real.channel(Component::Z).integral(t1, t2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn in_phase() -> FluctuatorConfig {
        FluctuatorConfig::new(0.3, 0.2, 0.5, 1.0, CorrelationMode::InPhase).unwrap()
    }

    fn manual(switches: Vec<f64>, sign: f64) -> NoiseRealization {
        NoiseRealization::new(
            10.0,
            CorrelationMode::InPhase,
            vec![SignChannel::new(sign, switches).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_tau() {
        for tau in [0.0, -1.0, f64::NAN] {
            assert!(matches!(
                FluctuatorConfig::new(0.1, 0.1, 0.1, tau, CorrelationMode::InPhase),
                Err(Error::Parameter(_))
            ));
        }
        let mut cfg = in_phase();
        cfg.tau = 0.0;
        let mut rng = stream_rng(1, 0);
        assert!(sample_realization(&cfg, 1.0, &mut rng).is_err());
    }

    #[test]
    fn zero_span_has_no_switches() {
        let real = sample_keyed(&in_phase(), 0.0, 7, 3).unwrap();
        assert!(real.channels()[0].switch_times().is_empty());
        let s = real.channels()[0].initial_sign();
        assert!(s == 1.0 || s == -1.0);
    }

    #[test]
    fn field_follows_flips() {
        let cfg = in_phase();
        let real = manual(vec![2.0, 5.0], 1.0);
        assert_eq!(field_at(&real, &cfg, 1.0).unwrap(), [0.3, 0.2, 0.5]);
        assert_eq!(field_at(&real, &cfg, 3.0).unwrap(), [-0.3, -0.2, -0.5]);
        assert_eq!(field_at(&real, &cfg, 6.0).unwrap(), [0.3, 0.2, 0.5]);
        assert!(matches!(field_at(&real, &cfg, 10.5), Err(Error::Range(_))));
        assert!(matches!(field_at(&real, &cfg, -0.1), Err(Error::Range(_))));
    }

    #[test]
    fn bz_integral_piecewise() {
        let cfg = in_phase();
        let real = manual(vec![2.0, 5.0], 1.0);
        // no switches inside
        assert!((integrate_bz(&real, &cfg, 0.5, 1.5).unwrap() - 0.5).abs() < 1e-15);
        // 0.5*(2-1) - 0.5*(5-2) + 0.5*(6-5)
        let v = integrate_bz(&real, &cfg, 1.0, 6.0).unwrap();
        assert!((v - (0.5 - 1.5 + 0.5)).abs() < 1e-15);
        let flipped = real.with_flipped_signs();
        assert_eq!(integrate_bz(&flipped, &cfg, 1.0, 6.0).unwrap(), -v);
        assert!(matches!(
            integrate_bz(&real, &cfg, 3.0, 2.0),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn keyed_streams_are_reproducible_and_distinct() {
        let cfg = in_phase();
        let a = sample_keyed(&cfg, 50.0, 11, 4).unwrap();
        let b = sample_keyed(&cfg, 50.0, 11, 4).unwrap();
        let c = sample_keyed(&cfg, 50.0, 11, 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn independent_mode_has_three_channels() {
        let cfg = FluctuatorConfig::new(0.1, 0.0, 0.1, 1.0, CorrelationMode::Independent).unwrap();
        let real = sample_keyed(&cfg, 20.0, 1, 0).unwrap();
        assert_eq!(real.channels().len(), 3);
        assert_ne!(
            real.channel(Component::X).switch_times(),
            real.channel(Component::Z).switch_times()
        );
    }

    #[test]
    fn merged_events_sorted() {
        let real = NoiseRealization::new(
            10.0,
            CorrelationMode::Independent,
            vec![
                SignChannel::new(1.0, vec![1.0, 4.0]).unwrap(),
                SignChannel::new(1.0, vec![2.0]).unwrap(),
                SignChannel::new(-1.0, vec![3.0, 4.0, 9.0]).unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(
            real.events_between(&[Component::X, Component::Z], 0.5, 9.0),
            vec![1.0, 3.0, 4.0]
        );
    }

    #[test]
    fn channel_validation() {
        assert!(SignChannel::new(0.5, vec![]).is_err());
        assert!(SignChannel::new(1.0, vec![2.0, 1.0]).is_err());
        assert!(NoiseRealization::new(
            1.0,
            CorrelationMode::InPhase,
            vec![SignChannel::new(1.0, vec![2.0]).unwrap()]
        )
        .is_err());
    }
}
