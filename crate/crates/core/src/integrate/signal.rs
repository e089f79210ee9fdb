use crate::error::{Error, Result};
use crate::vfields::{parse_expr, Expr};

/// One control channel `b_α(t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Channel {
    Constant(f64),
    /// `values[k]` holds on `[breaks[k-1], breaks[k])`; the last value holds
    /// from the final break onwards.
    PiecewiseConstant {
        breaks: Vec<f64>,
        values: Vec<f64>,
    },
    /// Expression in the single variable `t`.
    ClosedForm(Expr),
    /// Linear interpolation of samples.
    Sampled {
        times: Vec<f64>,
        values: Vec<f64>,
    },
}

impl Channel {
    pub fn piecewise(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breaks.len() + 1 {
            return Err(Error::invalid(format!(
                "{} breakpoints need {} values, got {}",
                breaks.len(),
                breaks.len() + 1,
                values.len()
            )));
        }
        check_increasing(&breaks, "breakpoints")?;
        Ok(Channel::PiecewiseConstant { breaks, values })
    }

    /// Parse a closed-form channel in the variable `t`.
    pub fn expr(text: &str) -> Result<Self> {
        Ok(Channel::ClosedForm(parse_expr(text, &["t".to_string()])?))
    }

    pub fn sampled(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() || times.len() < 2 {
            return Err(Error::invalid("sampled channel needs at least two (time, value) pairs"));
        }
        check_increasing(&times, "sample times")?;
        Ok(Channel::Sampled { times, values })
    }

    fn eval(&self, t: f64) -> Result<f64> {
        match self {
            Channel::Constant(c) => Ok(*c),
            Channel::PiecewiseConstant { breaks, values } => {
                let k = breaks.partition_point(|&b| b <= t);
                Ok(values[k])
            }
            Channel::ClosedForm(e) => e.eval(&[t]),
            Channel::Sampled { times, values } => {
                let k = times.partition_point(|&s| s <= t);
                if k == 0 {
                    return Ok(values[0]);
                }
                if k == times.len() {
                    return Ok(values[k - 1]);
                }
                let w = (t - times[k - 1]) / (times[k] - times[k - 1]);
                Ok(values[k - 1] + w * (values[k] - values[k - 1]))
            }
        }
    }

    fn breakpoints(&self) -> &[f64] {
        match self {
            Channel::PiecewiseConstant { breaks, .. } => breaks,
            Channel::Sampled { times, .. } => times,
            _ => &[],
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        match self {
            Channel::Constant(c) => *c == 0.0,
            Channel::PiecewiseConstant { values, .. } => values.iter().all(|v| *v == 0.0),
            Channel::ClosedForm(e) => e.is_zero(),
            Channel::Sampled { values, .. } => values.iter().all(|v| *v == 0.0),
        }
    }
}

fn check_increasing(v: &[f64], what: &str) -> Result<()> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid(format!("{what} must be finite")));
    }
    if v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(format!("{what} must be strictly increasing")));
    }
    Ok(())
}

/// Vector of control functions on a closed time interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSignal {
    t0: f64,
    t1: f64,
    channels: Vec<Channel>,
}

impl ControlSignal {
    pub fn new(t0: f64, t1: f64, channels: Vec<Channel>) -> Result<Self> {
        if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
            return Err(Error::invalid(format!("invalid signal domain [{t0}, {t1}]")));
        }
        for c in &channels {
            if let Channel::Sampled { times, .. } = c {
                if times[0] > t0 || times[times.len() - 1] < t1 {
                    return Err(Error::invalid("sampled channel does not cover the signal domain"));
                }
            }
        }
        Ok(Self { t0, t1, channels })
    }

    /// Closed-form channels given as expressions in `t`.
    pub fn from_exprs(t0: f64, t1: f64, texts: &[&str]) -> Result<Self> {
        let channels = texts.iter().map(|s| Channel::expr(s)).collect::<Result<_>>()?;
        Self::new(t0, t1, channels)
    }

    pub fn constant(t0: f64, t1: f64, values: &[f64]) -> Result<Self> {
        Self::new(t0, t1, values.iter().map(|&v| Channel::Constant(v)).collect())
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.t0, self.t1)
    }

    pub fn count(&self) -> usize {
        self.channels.len()
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    /// Extend with identically zero channels up to `r` channels.
    pub fn padded(&self, r: usize) -> Result<Self> {
        if self.channels.len() > r {
            return Err(Error::invalid(format!(
                "signal has {} channels, at most {r} allowed",
                self.channels.len()
            )));
        }
        let mut channels = self.channels.clone();
        channels.resize(r, Channel::Constant(0.0));
        Ok(Self {
            channels,
            ..self.clone()
        })
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let slack = 1e-12 * self.t0.abs().max(self.t1.abs()).max(1.0);
        if t < self.t0 - slack || t > self.t1 + slack || t.is_nan() {
            return Err(Error::Domain {
                message: format!("control evaluated outside [{}, {}]", self.t0, self.t1),
                t: Some(t),
            });
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        self.check_time(t)?;
        self.channels
            .iter()
            .map(|c| c.eval(t).map_err(|e| e.at_time(t)))
            .collect()
    }

    /// Evaluate into a caller-provided buffer.
    pub fn eval_into(&self, t: f64, out: &mut [f64]) -> Result<()> {
        self.check_time(t)?;
        for (o, c) in out.iter_mut().zip(&self.channels) {
            *o = c.eval(t).map_err(|e| e.at_time(t))?;
        }
        Ok(())
    }

    pub fn eval_channel(&self, i: usize, t: f64) -> Result<f64> {
        self.check_time(t)?;
        self.channels
            .get(i)
            .ok_or_else(|| Error::invalid(format!("no control channel {i}")))?
            .eval(t)
            .map_err(|e| e.at_time(t))
    }

    /// Sorted interior points where some channel is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .channels
            .iter()
            .flat_map(|c| c.breakpoints().iter().copied())
            .filter(|&b| b > self.t0 && b < self.t1)
            .collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    pub fn is_zero_channel(&self, i: usize) -> bool {
        self.channels.get(i).is_none_or(Channel::is_identically_zero)
    }
}
