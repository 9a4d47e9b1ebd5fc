//! Per-episode metrics rows, their CSV form, and the smoothing used in reports.

use thiserror::Error;

pub const METRICS_HEADER: &str =
    "episode,total_reward,steps,distance_m,mean_speed_mps,collided,epsilon,mean_td_error,wall_ms";

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeMetrics {
    /// 1-based.
    pub episode: usize,
    pub total_reward: f64,
    pub steps: usize,
    pub distance_m: f64,
    pub mean_speed_mps: f64,
    pub collided: bool,
    /// Exploration rate after the episode's last step.
    pub epsilon: f64,
    /// Mean over the episode's updates of the batch mean `|TD error|`; `None` when no
    /// update happened.
    pub mean_td_error: Option<f64>,
    pub wall_ms: u64,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("metrics line {line}: {msg}")]
pub struct MetricsParseError {
    pub line: usize,
    pub msg: String,
}

/// `%.17g`: 17 significant digits, fixed notation for moderate exponents, trailing
/// zeros trimmed. Parses back to the identical `f64`.
pub fn format_float(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa.to_string()), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

impl EpisodeMetrics {
    pub fn csv_fields(&self) -> Vec<String> {
        vec![
            self.episode.to_string(),
            format_float(self.total_reward),
            self.steps.to_string(),
            format_float(self.distance_m),
            format_float(self.mean_speed_mps),
            u8::from(self.collided).to_string(),
            format_float(self.epsilon),
            self.mean_td_error.map(format_float).unwrap_or_default(),
            self.wall_ms.to_string(),
        ]
    }

    pub fn csv_row(&self) -> String {
        self.csv_fields().join(",")
    }

    pub fn from_fields(fields: &[&str], line: usize) -> Result<Self, MetricsParseError> {
        let err = |msg: String| MetricsParseError { line, msg };
        if fields.len() != 9 {
            return Err(err(format!("expected 9 fields, found {}", fields.len())));
        }
        fn num<T: std::str::FromStr>(s: &str, name: &str, line: usize) -> Result<T, MetricsParseError> {
            s.parse().map_err(|_| MetricsParseError {
                line,
                msg: format!("bad {name} `{s}`"),
            })
        }
        Ok(Self {
            episode: num(fields[0], "episode", line)?,
            total_reward: num(fields[1], "total_reward", line)?,
            steps: num(fields[2], "steps", line)?,
            distance_m: num(fields[3], "distance_m", line)?,
            mean_speed_mps: num(fields[4], "mean_speed_mps", line)?,
            collided: match fields[5] {
                "0" => false,
                "1" => true,
                other => return Err(err(format!("bad collided flag `{other}`"))),
            },
            epsilon: num(fields[6], "epsilon", line)?,
            mean_td_error: if fields[7].is_empty() {
                None
            } else {
                Some(num(fields[7], "mean_td_error", line)?)
            },
            wall_ms: num(fields[8], "wall_ms", line)?,
        })
    }
}

/// Parses a metrics CSV, header included.
pub fn parse_metrics_csv(text: &str) -> Result<Vec<EpisodeMetrics>, MetricsParseError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == METRICS_HEADER => {}
        _ => {
            return Err(MetricsParseError {
                line: 1,
                msg: "missing or wrong header".into(),
            })
        }
    }
    lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| EpisodeMetrics::from_fields(&l.split(',').collect::<Vec<_>>(), i + 1))
        .collect()
}

/// Trailing moving average; early entries average over what is available.
pub fn moving_average(xs: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(xs.len());
    let mut sum = 0.0;
    for i in 0..xs.len() {
        sum += xs[i];
        if i >= window {
            sum -= xs[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

pub fn prefix_sums(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

/// Smoothed TD error series: moving average over the episodes that performed updates.
pub fn smoothed_td_error(rows: &[EpisodeMetrics], window: usize) -> Vec<f64> {
    let raw: Vec<f64> = rows.iter().filter_map(|r| r.mean_td_error).collect();
    moving_average(&raw, window)
}

/// Means of the first and last `fraction` of a series (at least one element each).
pub fn edge_window_means(xs: &[f64], fraction: f64) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = ((xs.len() as f64 * fraction).round() as usize).clamp(1, xs.len());
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    Some((mean(&xs[..n]), mean(&xs[xs.len() - n..])))
}
