use std::io::Write;

use crate::analysis::BifurcationDiagram;
use crate::integrate::Trajectory;
use crate::io::float::format_f64;
use crate::io::IoError;
use crate::model::{Component, StateVec};

/// Metadata lines that let [`CsvTrajectory::to_trajectory`] rebuild the
/// exact time base and divergence flag.
pub fn trajectory_metadata(traj: &Trajectory) -> Vec<String> {
    let mut meta = vec![format!("t0 = {}", format_f64(traj.t0)), format!("dt = {}", format_f64(traj.dt))];
    if let Some(k) = traj.diverged_at {
        meta.push(format!("diverged_at = {k}"));
    }
    meta
}

fn write_meta<W: Write>(out: &mut W, meta: &[String]) -> std::io::Result<()> {
    for line in meta {
        for part in line.lines() {
            writeln!(out, "# {part}")?;
        }
    }
    Ok(())
}

/// Writes `t` plus the selected channels, always in `x, y, z` order,
/// preceded by `meta` as `#` comment lines.
pub fn write_trajectory_csv<W: Write>(
    traj: &Trajectory,
    channels: &[Component],
    meta: &[String],
    mut out: W,
) -> Result<(), IoError> {
    let selected: Vec<Component> = Component::ALL.into_iter().filter(|c| channels.contains(c)).collect();
    if selected.is_empty() {
        return Err(IoError::EmptyChannels);
    }
    let mut buf = Vec::with_capacity(traj.len() * 20 * (selected.len() + 1) + 64);
    write_meta(&mut buf, meta)?;
    buf.extend_from_slice(b"t");
    for c in &selected {
        buf.push(b',');
        buf.extend_from_slice(c.name().as_bytes());
    }
    buf.push(b'\n');
    for (k, s) in traj.samples.iter().enumerate() {
        buf.extend_from_slice(format_f64(traj.time(k)).as_bytes());
        for c in &selected {
            buf.push(b',');
            buf.extend_from_slice(format_f64(s.component(*c)).as_bytes());
        }
        buf.push(b'\n');
    }
    out.write_all(&buf)?;
    out.flush()?;
    Ok(())
}

/// A parsed trajectory CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTrajectory {
    pub channels: Vec<Component>,
    pub times: Vec<f64>,
    /// One row per sample, values in `channels` order.
    pub rows: Vec<Vec<f64>>,
    /// `key = value` pairs from `#` comment lines, in file order.
    pub meta: Vec<(String, String)>,
}

impl CsvTrajectory {
    fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Rebuilds a [`Trajectory`]. Requires all three channels. The time base
    /// comes from `t0`/`dt` metadata when present, else from the `t` column.
    pub fn to_trajectory(&self) -> Result<Trajectory, IoError> {
        if self.channels != Component::ALL {
            return Err(IoError::Format { line: 0, message: "trajectory needs columns t,x,y,z".into() });
        }
        if self.rows.is_empty() {
            return Err(IoError::Format { line: 0, message: "trajectory has no samples".into() });
        }
        let parse_meta = |key: &str| -> Result<Option<f64>, IoError> {
            self.meta_value(key)
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| IoError::Format { line: 0, message: format!("bad {key} metadata '{v}'") })
                })
                .transpose()
        };
        let t0 = parse_meta("t0")?.unwrap_or(self.times[0]);
        let dt = match parse_meta("dt")? {
            Some(dt) => dt,
            None if self.times.len() > 1 => self.times[1] - self.times[0],
            None => 0.0,
        };
        let diverged_at = match self.meta_value("diverged_at") {
            Some(v) => Some(
                v.parse::<usize>()
                    .map_err(|_| IoError::Format { line: 0, message: format!("bad diverged_at metadata '{v}'") })?,
            ),
            None => None,
        };
        let samples = self.rows.iter().map(|r| StateVec::new(r[0], r[1], r[2])).collect();
        Ok(Trajectory { t0, dt, samples, diverged_at })
    }
}

fn parse_meta_line(rest: &str) -> Option<(String, String)> {
    let (k, v) = rest.split_once('=')?;
    Some((k.trim().to_string(), v.trim().to_string()))
}

fn parse_number(field: &str, line: usize) -> Result<f64, IoError> {
    field.parse::<f64>().map_err(|_| IoError::Format { line, message: format!("'{field}' is not a number") })
}

/// Parses a trajectory CSV written by [`write_trajectory_csv`].
pub fn read_trajectory_csv(text: &str) -> Result<CsvTrajectory, IoError> {
    let mut meta = Vec::new();
    let mut channels: Option<Vec<Component>> = None;
    let mut times = Vec::new();
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if let Some(rest) = raw.strip_prefix('#') {
            if let Some(kv) = parse_meta_line(rest) {
                meta.push(kv);
            }
            continue;
        }
        if raw.is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        match &channels {
            None => {
                if fields.first() != Some(&"t") {
                    return Err(IoError::Format { line, message: "header must start with 't'".into() });
                }
                let cols = fields[1..]
                    .iter()
                    .map(|f| f.parse::<Component>().map_err(|message| IoError::Format { line, message }))
                    .collect::<Result<Vec<_>, _>>()?;
                let expected: Vec<Component> = Component::ALL.into_iter().filter(|c| cols.contains(c)).collect();
                if cols.is_empty() || cols != expected {
                    return Err(IoError::Format {
                        line,
                        message: "header channels must be a non-empty subset of x,y,z in that order".into(),
                    });
                }
                channels = Some(cols);
            }
            Some(cols) => {
                if fields.len() != cols.len() + 1 {
                    return Err(IoError::Format {
                        line,
                        message: format!("expected {} fields, found {}", cols.len() + 1, fields.len()),
                    });
                }
                times.push(parse_number(fields[0], line)?);
                rows.push(fields[1..].iter().map(|f| parse_number(f, line)).collect::<Result<Vec<_>, _>>()?);
            }
        }
    }
    let channels = channels.ok_or(IoError::Format { line: 0, message: "missing header".into() })?;
    Ok(CsvTrajectory { channels, times, rows, meta })
}

/// Metadata for a bifurcation CSV: swept parameter, component, the full
/// list of swept values, and which of them diverged.
pub fn bifurcation_metadata(d: &BifurcationDiagram) -> Vec<String> {
    let join = |vs: &mut dyn Iterator<Item = f64>| {
        let parts: Vec<String> = vs.map(format_f64).collect();
        if parts.is_empty() {
            "none".to_string()
        } else {
            parts.join(" ")
        }
    };
    let diverged = join(&mut d.parameter_values.iter().zip(&d.diverged).filter(|(_, &f)| f).map(|(&v, _)| v));
    vec![
        format!("parameter = {}", d.parameter),
        format!("component = {}", d.component),
        format!("count = {}", d.parameter_values.len()),
        format!("parameter_values = {}", join(&mut d.parameter_values.iter().copied())),
        format!("diverged = {diverged}"),
    ]
}

/// Writes one `parameter,value` row per attractor sample.
pub fn write_bifurcation_csv<W: Write>(d: &BifurcationDiagram, meta: &[String], mut out: W) -> Result<(), IoError> {
    let mut buf = Vec::new();
    write_meta(&mut buf, meta)?;
    buf.extend_from_slice(b"parameter,value\n");
    for (p, v) in d.points() {
        buf.extend_from_slice(format_f64(p).as_bytes());
        buf.push(b',');
        buf.extend_from_slice(format_f64(v).as_bytes());
        buf.push(b'\n');
    }
    out.write_all(&buf)?;
    out.flush()?;
    Ok(())
}

/// A parsed bifurcation CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvBifurcation {
    pub points: Vec<(f64, f64)>,
    pub meta: Vec<(String, String)>,
}

pub fn read_bifurcation_csv(text: &str) -> Result<CsvBifurcation, IoError> {
    let mut meta = Vec::new();
    let mut points = Vec::new();
    let mut seen_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if let Some(rest) = raw.strip_prefix('#') {
            if let Some(kv) = parse_meta_line(rest) {
                meta.push(kv);
            }
            continue;
        }
        if raw.is_empty() {
            continue;
        }
        if !seen_header {
            if raw != "parameter,value" {
                return Err(IoError::Format { line, message: "header must be 'parameter,value'".into() });
            }
            seen_header = true;
            continue;
        }
        let (p, v) =
            raw.split_once(',').ok_or_else(|| IoError::Format { line, message: "expected two fields".into() })?;
        points.push((parse_number(p, line)?, parse_number(v, line)?));
    }
    if !seen_header {
        return Err(IoError::Format { line: 0, message: "missing header".into() });
    }
    Ok(CsvBifurcation { points, meta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CoefficientName;
    use proptest::prelude::*;

    fn write_to_string(traj: &Trajectory, channels: &[Component], meta: &[String]) -> String {
        let mut out = Vec::new();
        write_trajectory_csv(traj, channels, meta, &mut out).unwrap();
        String::from_utf8(out).unwrap()
    }

    #[test]
    fn single_origin_sample() {
        let t = Trajectory { t0: 0.0, dt: 1e-3, samples: vec![StateVec::ORIGIN], diverged_at: None };
        assert_eq!(write_to_string(&t, &Component::ALL, &[]), "t,x,y,z\n0,0,0,0\n");
    }

    #[test]
    fn channel_subset_in_fixed_order() {
        let t = Trajectory { t0: 1.0, dt: 0.5, samples: vec![StateVec::new(1.0, 2.0, 3.0); 2], diverged_at: None };
        let s = write_to_string(&t, &[Component::Z, Component::X], &[]);
        assert_eq!(s, "t,x,z\n1,1,3\n1.5,1,3\n");
        let parsed = read_trajectory_csv(&s).unwrap();
        assert_eq!(parsed.channels, vec![Component::X, Component::Z]);
        assert!(parsed.to_trajectory().is_err());
    }

    #[test]
    fn empty_channels_is_error() {
        let t = Trajectory { t0: 0.0, dt: 1.0, samples: vec![StateVec::ORIGIN], diverged_at: None };
        let mut out = Vec::new();
        assert!(matches!(write_trajectory_csv(&t, &[], &[], &mut out), Err(IoError::EmptyChannels)));
        assert!(out.is_empty());
    }

    #[test]
    fn malformed_input_reports_line() {
        let err = read_trajectory_csv("t,x,y,z\n0,1,2\n").unwrap_err();
        assert!(matches!(err, IoError::Format { line: 2, .. }));
        let err = read_trajectory_csv("# c\nt,x,q\n").unwrap_err();
        assert!(matches!(err, IoError::Format { line: 2, .. }));
        let err = read_trajectory_csv("t,z,x\n").unwrap_err();
        assert!(matches!(err, IoError::Format { line: 1, .. }));
        assert!(read_trajectory_csv("").is_err());
        assert!(read_trajectory_csv("t,x,y,z\n0,a,0,0\n").is_err());
    }

    #[test]
    fn bifurcation_round_trip() {
        let d = BifurcationDiagram {
            parameter: CoefficientName::C3,
            component: Component::Y,
            parameter_values: vec![0.1, 0.2, 0.3],
            attractor_samples: vec![vec![1.5, 2.5], vec![], vec![0.1]],
            diverged: vec![false, true, false],
        };
        let mut out = Vec::new();
        write_bifurcation_csv(&d, &bifurcation_metadata(&d), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("# diverged = 0.20000000000000001\n"));
        let parsed = read_bifurcation_csv(&text).unwrap();
        assert_eq!(parsed.points, vec![(0.1, 1.5), (0.1, 2.5), (0.3, 0.1)]);
        assert!(parsed.meta.contains(&("parameter".to_string(), "c3".to_string())));
        assert!(read_bifurcation_csv("p,v\n").is_err());
    }

    fn finite() -> impl Strategy<Value = f64> {
        prop_oneof![-1e3..1e3f64, any::<f64>().prop_filter("finite", |v| v.is_finite())]
    }

    proptest! {
        #[test]
        fn trajectory_round_trip(
            t0 in finite(),
            dt in 1e-9..10.0f64,
            raw in prop::collection::vec((finite(), finite(), finite()), 1..40),
            diverged in any::<bool>(),
        ) {
            let samples: Vec<StateVec> = raw.into_iter().map(|(x, y, z)| StateVec::new(x, y, z)).collect();
            let diverged_at = diverged.then_some(samples.len() - 1);
            let traj = Trajectory { t0, dt, samples, diverged_at };
            let text = write_to_string(&traj, &Component::ALL, &trajectory_metadata(&traj));
            let parsed = read_trajectory_csv(&text).unwrap();
            for (k, t) in parsed.times.iter().enumerate() {
                prop_assert_eq!(t.to_bits(), traj.time(k).to_bits());
            }
            let back = parsed.to_trajectory().unwrap();
            prop_assert_eq!(back.t0.to_bits(), traj.t0.to_bits());
            prop_assert_eq!(back.dt.to_bits(), traj.dt.to_bits());
            prop_assert_eq!(back.diverged_at, traj.diverged_at);
            for (a, b) in back.samples.iter().zip(&traj.samples) {
                prop_assert_eq!(a.x.to_bits(), b.x.to_bits());
                prop_assert_eq!(a.y.to_bits(), b.y.to_bits());
                prop_assert_eq!(a.z.to_bits(), b.z.to_bits());
            }
        }
    }
}
