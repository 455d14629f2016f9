//! Minimal SVG line charts (log-log) for the sweep reports.

fn map(value: f64, lo: f64, hi: f64, out_lo: f64, out_hi: f64) -> f64 {
    out_lo + (value - lo) / (hi - lo) * (out_hi - out_lo)
}

/// Log-log chart of one or more series, with an optional reference line of
/// slope 1/2 anchored at the first point of the first series.
pub fn loglog_chart(
    title: &str,
    x_label: &str,
    series: &[(String, Vec<(f64, f64)>)],
    with_half_slope_reference: bool,
) -> String {
    let (w, h) = (640.0, 420.0);
    let (ml, mr, mt, mb) = (70.0, 20.0, 40.0, 50.0);
    let mut pts: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|(_, s)| s.iter().copied())
        .filter(|&(x, y)| x > 0.0 && y > 0.0)
        .map(|(x, y)| (x.log10(), y.log10()))
        .collect();
    if with_half_slope_reference {
        if let Some(&(x0, y0)) = series.first().and_then(|(_, s)| s.first()) {
            if x0 > 0.0 && y0 > 0.0 {
                for &(x, _) in series[0].1.iter() {
                    let y = y0.log10() + 0.5 * (x.log10() - x0.log10());
                    pts.push((x.log10(), y));
                }
            }
        }
    }
    if pts.is_empty() {
        return format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\"><text x=\"20\" y=\"40\">{title}: no positive data</text></svg>");
    }
    let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &pts {
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_lo = y_lo.min(y);
        y_hi = y_hi.max(y);
    }
    if (x_hi - x_lo).abs() < 1e-12 {
        x_hi = x_lo + 1.0;
    }
    if (y_hi - y_lo).abs() < 1e-12 {
        y_hi = y_lo + 1.0;
    }
    let px = |x: f64| map(x, x_lo, x_hi, ml, w - mr);
    let py = |y: f64| map(y, y_lo, y_hi, h - mb, mt);

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         font-family=\"monospace\" font-size=\"12\">\n"
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{title}</text>\n",
        w / 2.0
    ));
    out.push_str(&format!(
        "<rect x=\"{ml}\" y=\"{mt}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888\"/>\n",
        w - ml - mr,
        h - mt - mb
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">log10 {x_label}</text>\n",
        w / 2.0,
        h - 12.0
    ));
    // axis ticks at integer exponents
    for e in (x_lo.floor() as i64)..=(x_hi.ceil() as i64) {
        let x = e as f64;
        if x < x_lo || x > x_hi {
            continue;
        }
        out.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#ccc\"/>\n<text x=\"{0}\" y=\"{3}\" text-anchor=\"middle\">{e}</text>\n",
            px(x), py(y_lo), py(y_hi), h - mb + 16.0
        ));
    }
    for e in (y_lo.floor() as i64)..=(y_hi.ceil() as i64) {
        let y = e as f64;
        if y < y_lo || y > y_hi {
            continue;
        }
        out.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"#ccc\"/>\n<text x=\"{3}\" y=\"{1}\" text-anchor=\"end\">{e}</text>\n",
            px(x_lo), py(y), px(x_hi), ml - 6.0
        ));
    }
    let colors = ["#1f6fb2", "#c23b22", "#2e8540", "#8031a7"];
    for (i, (name, s)) in series.iter().enumerate() {
        let color = colors[i % colors.len()];
        let path: Vec<String> = s
            .iter()
            .filter(|&&(x, y)| x > 0.0 && y > 0.0)
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x.log10()), py(y.log10())))
            .collect();
        if path.is_empty() {
            continue;
        }
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            path.join(" ")
        ));
        for p in &path {
            let xy: Vec<&str> = p.split(',').collect();
            out.push_str(&format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"2.5\" fill=\"{color}\"/>\n",
                xy[0], xy[1]
            ));
        }
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{name}</text>\n",
            ml + 10.0,
            mt + 16.0 * (i as f64 + 1.0)
        ));
    }
    if with_half_slope_reference {
        if let Some(&(x0, y0)) = series.first().and_then(|(_, s)| s.first()) {
            if x0 > 0.0 && y0 > 0.0 {
                let s0 = series[0].1.clone();
                let path: Vec<String> = s0
                    .iter()
                    .map(|&(x, _)| {
                        let y = y0.log10() + 0.5 * (x.log10() - x0.log10());
                        format!("{:.2},{:.2}", px(x.log10()), py(y))
                    })
                    .collect();
                out.push_str(&format!(
                    "<polyline points=\"{}\" fill=\"none\" stroke=\"#999\" stroke-dasharray=\"5,4\"/>\n",
                    path.join(" ")
                ));
                out.push_str(&format!(
                    "<text x=\"{}\" y=\"{}\" fill=\"#999\">slope 1/2 reference</text>\n",
                    ml + 10.0,
                    mt + 16.0 * (series.len() as f64 + 1.0)
                ));
            }
        }
    }
    out.push_str("</svg>\n");
    out
}
