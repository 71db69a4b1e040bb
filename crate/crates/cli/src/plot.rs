use quantune::generate::GenerationStats;

const WIDTH: usize = 360;
const HEIGHT: usize = 240;
const BASE: usize = 200;

/// Bar chart of good, skipped and noisy round counts.
pub fn stats_svg(stats: &GenerationStats) -> String {
    let bars = [("good", stats.good, "#3b7dd8"), ("skipped", stats.skipped, "#8a8a8a"), ("noisy", stats.noisy, "#d8573b")];
    let top = bars.iter().map(|b| b.1).max().unwrap_or(0).max(1);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    s.push_str(&format!("<line x1=\"20\" y1=\"{BASE}\" x2=\"340\" y2=\"{BASE}\" stroke=\"black\"/>\n"));
    for (i, (label, count, colour)) in bars.iter().enumerate() {
        let h = count * 160 / top;
        let x = 40 + i * 100;
        s.push_str(&format!(
            "<rect x=\"{x}\" y=\"{}\" width=\"80\" height=\"{h}\" fill=\"{colour}\"/>\n",
            BASE - h
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{count}</text>\n",
            x + 40,
            BASE - h - 4
        ));
        s.push_str(&format!("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{label}</text>\n", x + 40, BASE + 18));
    }
    s.push_str("</svg>\n");
    s
}
