//! `param_value,metric_value` tables for rebuilding sweep figures.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use crate::error::Result;
use crate::metrics::ScalarResult;
use crate::trace::{Trace, PARAM_PREFIX};

/// Points of one metric against one parameter, sorted by parameter value.
/// Undefined results keep their row with an empty metric value.
pub type PlotSeries = Vec<(f64, Option<f64>)>;

pub fn write_plot_csv(sink: impl Write, points: &[(f64, Option<f64>)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["param_value", "metric_value"])?;
    for (p, m) in points {
        w.write_record([p.to_string(), m.map(|v| v.to_string()).unwrap_or_default()])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Groups per-scenario scalars by (metric, parameter) for every parameter
/// that takes more than one value across `traces`.
pub fn sweep_series(traces: &[Trace], scalars: &[ScalarResult]) -> BTreeMap<(String, String), PlotSeries> {
    let mut values: BTreeMap<&str, BTreeSet<u64>> = BTreeMap::new();
    for t in traces {
        for (k, v) in t.metadata() {
            if let (Some(name), Ok(x)) = (k.strip_prefix(PARAM_PREFIX), v.parse::<f64>()) {
                values.entry(name).or_default().insert(x.to_bits());
            }
        }
    }
    let swept: Vec<&str> = values.iter().filter(|(_, v)| v.len() > 1).map(|(k, _)| *k).collect();
    let by_id: HashMap<&str, &Trace> = traces.iter().map(|t| (t.scenario_id(), t)).collect();
    let mut out: BTreeMap<(String, String), PlotSeries> = BTreeMap::new();
    for s in scalars {
        let Some(trace) = by_id.get(s.scenario_id.as_str()) else {
            continue;
        };
        for param in &swept {
            let x = trace
                .metadata()
                .get(&format!("{PARAM_PREFIX}{param}"))
                .and_then(|v| v.parse::<f64>().ok());
            if let Some(x) = x {
                out.entry((s.metric_name.clone(), (*param).to_owned()))
                    .or_default()
                    .push((x, s.value()));
            }
        }
    }
    for points in out.values_mut() {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Unit;
    use crate::geometry::Vec2;
    use crate::trace::test_support::straight;
    use crate::trace::{ActorClass, Trace};

    fn trace(id: &str, v: f64, d: f64) -> Trace {
        let ego = straight("ego", ActorClass::Vehicle, Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), 0.0, 0.1, 5);
        Trace::new(id, 0.1, [ego], Default::default())
            .unwrap()
            .with_metadata("param.v_max", v.to_string())
            .with_metadata("param.d_start", d.to_string())
    }

    #[test]
    fn only_varying_parameters_are_plotted() {
        let traces = [trace("a", 30.0, 16.0), trace("b", 32.0, 16.0)];
        let scalars = [
            ScalarResult::defined("pet", 2.0, Unit::Second).with_scenario("b"),
            ScalarResult::undefined("pet", Unit::Second).with_scenario("a"),
        ];
        let s = sweep_series(&traces, &scalars);
        assert_eq!(s.len(), 1);
        assert_eq!(s[&("pet".into(), "v_max".into())], vec![(30.0, None), (32.0, Some(2.0))]);
    }

    #[test]
    fn csv_has_two_columns() {
        let mut buf = Vec::new();
        write_plot_csv(&mut buf, &[(38.0, Some(1.5)), (39.0, None)]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "param_value,metric_value\n38,1.5\n39,\n");
    }
}
