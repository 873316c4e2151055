//! Gnuplot script emission over the data files a run produced; plotting is
//! strictly a post-processing step and never recomputes anything.

use anyhow::{bail, Result};
use std::path::Path;

pub fn emit_plot_script(run_dir: &Path) -> Result<String> {
    let mut script = String::from("set datafile separator ','\nset key left bottom\n");
    let mut any = false;
    if run_dir.join("distance.csv").exists() {
        any = true;
        script.push_str(
            "set logscale xy\nset xlabel 't'\nset ylabel 'max-norm distance'\n\
             set terminal pngcairo size 900,600\nset output 'distance.png'\n\
             plot 'distance.csv' skip 1 using 1:2 with linespoints title 'data', \\\n\
             \t[5:*] 0.5*x**(-1.0/3.0) with lines dashtype 2 title 't^{-1/3} guide'\n",
        );
    }
    if run_dir.join("currents_after.csv").exists() {
        any = true;
        script.push_str(
            "\nset output 'currents.png'\nunset logscale\nset xlabel 'range d'\nset ylabel 'I_d'\n\
             plot 'currents_before.csv' skip 1 using 1:2 with impulses title 'before', \\\n\
             \t'currents_after.csv' skip 1 using 1:2 with points pointtype 7 title 'steady state'\n",
        );
    }
    if !any {
        bail!("no plottable data files in {}", run_dir.display());
    }
    let path = run_dir.join("plot.gp");
    std::fs::write(&path, &script)?;
    Ok(format!("wrote {}", path.display()))
}
