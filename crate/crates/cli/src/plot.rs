//! SVG panels for a recorded metrics series: power, RAM, swap and planning
//! latency, with decode windows shaded.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use plotters::prelude::*;
use taskbot_core::{MetricsSample, TaskResult};

const SIZE: (u32, u32) = (900, 260);
const SHADE: RGBColor = RGBColor(255, 214, 170);

/// Decode windows implied by task results: from task start for the planning latency.
pub fn decode_windows(results: &[TaskResult]) -> Vec<(f64, f64)> {
    results.iter().map(|r| (r.started_at, r.started_at + r.latency_sim_s)).collect()
}

fn series_panel(
    path: &Path,
    title: &str,
    unit: &str,
    points: &[(f64, f64)],
    y_range: (f64, f64),
    windows: &[(f64, f64)],
) -> Result<()> {
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE)?;
    let t_end = points.last().map_or(1.0, |p| p.0).max(1.0);
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 18))
        .margin(10)
        .x_label_area_size(30)
        .y_label_area_size(50)
        .build_cartesian_2d(0.0..t_end, y_range.0..y_range.1)?;
    chart.configure_mesh().x_desc("simulation time (s)").y_desc(unit).draw()?;
    chart.draw_series(
        windows.iter().map(|(a, b)| Rectangle::new([(*a, y_range.0), (*b, y_range.1)], SHADE.filled())),
    )?;
    chart.draw_series(LineSeries::new(points.iter().copied(), BLUE.stroke_width(2)))?;
    root.present()?;
    Ok(())
}

fn latency_panel(path: &Path, results: &[TaskResult]) -> Result<()> {
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE)?;
    let max = results.iter().map(|r| r.latency_sim_s).fold(0.0, f64::max).max(0.1) * 1.2;
    let n = results.len().max(1) as f64;
    let mut chart = ChartBuilder::on(&root)
        .caption("Planning latency", ("sans-serif", 18))
        .margin(10)
        .x_label_area_size(30)
        .y_label_area_size(50)
        .build_cartesian_2d(0.0..n + 1.0, 0.0..max)?;
    chart.configure_mesh().x_desc("task").y_desc("seconds").draw()?;
    chart.draw_series(results.iter().enumerate().map(|(i, r)| {
        let x = i as f64 + 1.0;
        Rectangle::new([(x - 0.3, 0.0), (x + 0.3, r.latency_sim_s)], BLUE.filled())
    }))?;
    root.present()?;
    Ok(())
}

/// Write the four panels into `dir`; returns the files written.
pub fn plot_metrics(dir: &Path, samples: &[MetricsSample], results: &[TaskResult]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let windows = decode_windows(results);
    let pick = |f: fn(&MetricsSample) -> f64| samples.iter().map(|s| (s.t, f(s))).collect::<Vec<_>>();
    let power = pick(|s| s.power_w);
    let max_power = power.iter().map(|p| p.1).fold(0.0, f64::max).max(1.0) * 1.2;
    let panels = [
        ("power.svg", "Total power", "W", power, (0.0, max_power)),
        ("ram.svg", "RAM utilization", "%", pick(|s| s.ram_pct), (0.0, 100.0)),
        ("swap.svg", "Swap utilization", "%", pick(|s| s.swap_pct), (0.0, 100.0)),
    ];
    let mut written = Vec::new();
    for (file, title, unit, points, range) in panels {
        let path = dir.join(file);
        series_panel(&path, title, unit, &points, range, &windows)?;
        written.push(path);
    }
    let path = dir.join("latency.svg");
    latency_panel(&path, results)?;
    written.push(path);
    Ok(written)
}
