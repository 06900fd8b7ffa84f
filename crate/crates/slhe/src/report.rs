//! CSV and text rendering of halo measurements.

use std::fmt::Write;

use slhe_core::hvs::{HaloReport, StackedLiReport, SweepRow};

pub const SWEEP_HEADER: &str = "sigma,policy,light_amp,dark_amp,light_width,dark_width";

pub fn policy_label(row: &SweepRow) -> &'static str {
    row.policy.map_or("uniform", |p| p.name())
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for row in rows {
        let r = &row.report;
        writeln!(
            out,
            "{},{},{:.3},{:.3},{},{}",
            row.sigma,
            policy_label(row),
            r.light_amp,
            r.dark_amp,
            r.light_width,
            r.dark_width
        )
        .expect("writing to a String");
    }
    out
}

fn halo_line(out: &mut String, label: &str, r: &HaloReport) {
    writeln!(
        out,
        "{label:<20} light_amp {:>9.3}  dark_amp {:>9.3}  light_width {:>4}  dark_width {:>4}",
        r.light_amp, r.dark_amp, r.light_width, r.dark_width
    )
    .expect("writing to a String");
}

pub fn halo_text(original: &HaloReport, processed: &HaloReport, li: &StackedLiReport) -> String {
    let mut out = String::new();
    halo_line(&mut out, "original", original);
    halo_line(&mut out, "processed", processed);
    halo_line(&mut out, "perceived original", &li.perceived_original);
    halo_line(&mut out, "perceived processed", &li.perceived_processed);
    writeln!(out, "stacked lateral inhibition: {}", if li.stacked() { "yes" } else { "no" }).expect("writing to a String");
    out
}
