//! Self-contained SVG plots and matching gnuplot scripts.

use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Dashed,
    Points,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
    pub color: &'static str,
}

#[derive(Debug, Clone)]
pub struct Plot {
    pub title: String,
    pub xlabel: String,
    pub ylabel: String,
    pub log_x: bool,
    pub series: Vec<Series>,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 60.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Plot {
    fn bounds(&self) -> Option<(f64, f64, f64, f64)> {
        let pts = self.series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
        let mut b: Option<(f64, f64, f64, f64)> = None;
        for &(x, y) in pts {
            let x = if self.log_x { x.log10() } else { x };
            if !x.is_finite() {
                continue;
            }
            b = Some(match b {
                None => (x, x, y, y),
                Some((a, c, d, e)) => (a.min(x), c.max(x), d.min(y), e.max(y)),
            });
        }
        b.map(|(x0, x1, y0, y1)| {
            let (x0, x1) = if x1 > x0 { (x0, x1) } else { (x0 - 0.5, x0 + 0.5) };
            let pad = if y1 > y0 { 0.05 * (y1 - y0) } else { 0.5 * y0.abs().max(1e-300) };
            (x0, x1, y0 - pad, y1 + pad)
        })
    }

    pub fn to_svg(&self, config_hash: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
        );
        let _ = writeln!(s, "<!-- config_hash: {config_hash} -->");
        let _ = writeln!(s, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">{}</text>",
            W / 2.0,
            esc(&self.title)
        );
        let Some((x0, x1, y0, y1)) = self.bounds() else {
            s.push_str("</svg>\n");
            return s;
        };
        let px = |x: f64| {
            let x = if self.log_x { x.log10() } else { x };
            PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD)
        };
        let py = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
        let _ = writeln!(
            s,
            "<rect x=\"{PAD}\" y=\"{PAD}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
            W - 2.0 * PAD,
            H - 2.0 * PAD
        );
        for i in 0..=4 {
            let fx = x0 + (x1 - x0) * i as f64 / 4.0;
            let fy = y0 + (y1 - y0) * i as f64 / 4.0;
            let xl = if self.log_x { format!("1e{fx:.1}") } else { format!("{fx:.3e}") };
            let xp = PAD + (W - 2.0 * PAD) * i as f64 / 4.0;
            let _ = writeln!(
                s,
                "<text x=\"{xp:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">{xl}</text>",
                H - PAD + 16.0
            );
            let _ = writeln!(
                s,
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">{fy:.3e}</text>",
                PAD - 4.0,
                py(fy) + 3.0
            );
        }
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            W / 2.0,
            H - 18.0,
            esc(&self.xlabel)
        );
        let _ = writeln!(
            s,
            "<text x=\"16\" y=\"{}\" transform=\"rotate(-90 16 {})\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            H / 2.0,
            H / 2.0,
            esc(&self.ylabel)
        );
        for (k, ser) in self.series.iter().enumerate() {
            let pts: Vec<(f64, f64)> = ser
                .points
                .iter()
                .filter(|p| p.0.is_finite() && p.1.is_finite() && (!self.log_x || p.0 > 0.0))
                .map(|&(x, y)| (px(x), py(y)))
                .collect();
            match ser.style {
                Style::Points => {
                    for (x, y) in &pts {
                        let _ = writeln!(s, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3\" fill=\"{}\"/>", ser.color);
                    }
                }
                Style::Line | Style::Dashed => {
                    let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                    let dash = if ser.style == Style::Dashed { " stroke-dasharray=\"6 4\"" } else { "" };
                    let _ = writeln!(
                        s,
                        "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"{dash}/>",
                        path.join(" "),
                        ser.color
                    );
                }
            }
            let ly = PAD + 14.0 + 14.0 * k as f64;
            let _ = writeln!(
                s,
                "<text x=\"{:.1}\" y=\"{ly:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{}\">{}</text>",
                W - PAD - 6.0,
                ser.color,
                esc(&ser.name)
            );
        }
        s.push_str("</svg>\n");
        s
    }

    /// Whitespace-separated data, one block per series, blocks separated by two blank lines.
    pub fn to_dat(&self, config_hash: &str) -> String {
        let mut s = format!("# config_hash: {config_hash}\n");
        for ser in &self.series {
            let _ = writeln!(s, "# {}", ser.name);
            for (x, y) in &ser.points {
                let _ = writeln!(s, "{x:.17e} {y:.17e}");
            }
            s.push_str("\n\n");
        }
        s
    }

    pub fn to_gnuplot(&self, dat_file: &str, config_hash: &str) -> String {
        let mut s = format!("# config_hash: {config_hash}\nset title \"{}\"\nset xlabel \"{}\"\nset ylabel \"{}\"\n", self.title, self.xlabel, self.ylabel);
        if self.log_x {
            s.push_str("set logscale x\n");
        }
        let parts: Vec<String> = self
            .series
            .iter()
            .enumerate()
            .map(|(i, ser)| {
                let with = match ser.style {
                    Style::Line => "lines",
                    Style::Dashed => "lines dt 2",
                    Style::Points => "points pt 7",
                };
                format!("\"{dat_file}\" index {i} with {with} lc rgb \"{}\" title \"{}\"", ser.color, ser.name)
            })
            .collect();
        let _ = writeln!(s, "plot {}", parts.join(", \\\n     "));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_all_series() {
        let p = Plot {
            title: "t <x>".into(),
            xlabel: "x".into(),
            ylabel: "y".into(),
            log_x: false,
            series: vec![
                Series { name: "a".into(), points: vec![(0.0, 1.0), (1.0, 2.0)], style: Style::Line, color: "#1f77b4" },
                Series { name: "b".into(), points: vec![(0.5, 1.5)], style: Style::Points, color: "#d62728" },
            ],
        };
        let svg = p.to_svg("abc");
        assert!(svg.contains("<polyline") && svg.contains("<circle") && svg.contains("t &lt;x&gt;"));
        assert!(svg.contains("config_hash: abc"));
        let gp = p.to_gnuplot("d.dat", "abc");
        assert!(gp.contains("index 1 with points"));
        assert_eq!(p.to_dat("abc").matches("\n\n\n").count(), 2);
    }

    #[test]
    fn empty_plot_is_valid_svg() {
        let p = Plot { title: "e".into(), xlabel: String::new(), ylabel: String::new(), log_x: true, series: vec![] };
        assert!(p.to_svg("h").ends_with("</svg>\n"));
    }
}
