//! Plain-text tables for `--pretty`.

use std::fmt::Write;

use avatar_core::eval::{ExperimentReport, MetricsReport};

pub fn conformance(fit: f64, prec: f64, gen: f64) -> String {
    format!("fitness         {fit:.4}\nprecision       {prec:.4}\ngeneralization  {gen:.4}\n")
}

pub fn metrics(r: &MetricsReport) -> String {
    let c = &r.counts;
    let mut s = String::new();
    let _ = writeln!(s, "|V̂_S| {}  |V_S| {}  |L+| {}  |V_u| {}", c.sampled, c.system, c.observed, c.unobserved);
    let _ = writeln!(s, "tp    {:.4}  ({}/{})", r.tp, c.realistic, c.sampled);
    let _ = writeln!(s, "fp    {:.4}", r.fp);
    let _ = writeln!(s, "tp_S  {:.4}  ({}/{})", r.tp_s, c.realistic, c.system);
    let _ = writeln!(s, "tp_o  {:.4}  ({}/{})", r.tp_o, c.hit_observed, c.observed);
    let _ = writeln!(s, "tp_u  {:.4}  ({}/{})", r.tp_u, c.hit_unobserved, c.unobserved);
    if let Some(e) = r.tp_e {
        let _ = writeln!(s, "tp_e  {e:.4}");
    }
    let _ = writeln!(s, "s     {:.4}", r.s);
    s
}

pub fn experiment(r: &ExperimentReport) -> String {
    let mut s = String::new();
    for sys in &r.systems {
        let _ = writeln!(
            s,
            "{}  |A|={} μ={} |V_S|={} |L+|={} |V_u|={}",
            sys.name, sys.alphabet_size, sys.log_max_len, sys.system_variants, sys.observed_variants, sys.unobserved_variants
        );
        let _ = writeln!(s, "  {:<14} {:>7} {:>7} {:>7} {:>7} {:>7}", "estimator", "|V̂|", "tp", "tp_u", "s", "gen");
        for x in &sys.samplers {
            let m = &x.metrics;
            let _ = writeln!(s, "  {:<14} {:>7} {:>7.3} {:>7.3} {:>7.3} {:>7}", x.name, m.counts.sampled, m.tp, m.tp_u, m.s, "");
        }
        for x in &sys.models {
            let gen = x.mean_generalization.map_or("-".into(), |g| format!("{g:.3}"));
            match &x.metrics {
                Some(m) => {
                    let _ = writeln!(
                        s,
                        "  {:<14} {:>7} {:>7.3} {:>7.3} {:>7.3} {:>7}",
                        x.name, m.counts.sampled, m.tp, m.tp_u, m.s, gen
                    );
                }
                None => {
                    let _ = writeln!(s, "  {:<14} {:>7} {:>7} {:>7} {:>7} {:>7}", x.name, "-", "-", "-", "-", gen);
                }
            }
        }
    }
    if !r.comparisons.is_empty() {
        let _ = writeln!(s, "\nsampler vs model (upper-tailed, α = 0.05)");
        for c in &r.comparisons {
            let k = &c.comparison;
            let _ = writeln!(
                s,
                "  {:<14} {:<10} {:?} p={:.4}{}",
                c.sampler,
                c.model,
                k.test,
                k.p_value,
                if k.significant { " *" } else { "" }
            );
        }
    }
    s
}
