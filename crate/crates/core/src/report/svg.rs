use std::fmt::Write;

/// Shortest round-trip decimal of `x` rounded to two places.
pub fn coord(x: f64) -> String {
    let r = (x * 100.0).round() / 100.0;
    num(if r == 0.0 { 0.0 } else { r })
}

/// Shortest round-trip decimal, with negative zero printed as `0`.
pub fn num(x: f64) -> String {
    debug_assert!(x.is_finite());
    if x == 0.0 {
        "0".into()
    } else {
        format!("{x}")
    }
}

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

pub struct Svg {
    buf: String,
}

impl Svg {
    pub fn new(width: u32, height: u32) -> Self {
        let mut buf = String::new();
        writeln!(
            buf,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
        )
        .unwrap();
        writeln!(buf, r#"<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>"#).unwrap();
        Self { buf }
    }

    pub fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, style: &str) {
        writeln!(
            self.buf,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" {style}/>"#,
            coord(x1),
            coord(y1),
            coord(x2),
            coord(y2)
        )
        .unwrap();
    }

    pub fn text(&mut self, x: f64, y: f64, anchor: &str, extra: &str, content: &str) {
        let extra = if extra.is_empty() {
            String::new()
        } else {
            format!(" {extra}")
        };
        writeln!(
            self.buf,
            r#"<text x="{}" y="{}" text-anchor="{anchor}"{extra}>{}</text>"#,
            coord(x),
            coord(y),
            escape(content)
        )
        .unwrap();
    }

    pub fn polyline_points(points: &[(f64, f64)]) -> String {
        points
            .iter()
            .map(|(x, y)| format!("{},{}", coord(*x), coord(*y)))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn raw(&mut self, element: &str) {
        self.buf.push_str(element);
        self.buf.push('\n');
    }

    pub fn finish(mut self) -> String {
        self.buf.push_str("</svg>\n");
        self.buf
    }
}

/// Tick step from {1, 2, 5} x 10^k giving about `target` intervals.
pub fn nice_step(span: f64, target: usize) -> f64 {
    if span <= 0.0 {
        return 1.0;
    }
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formatting() {
        assert_eq!(coord(12.345_6), "12.35");
        assert_eq!(coord(0.3), "0.3");
        assert_eq!(coord(-0.001), "0");
        assert_eq!(coord(100.0), "100");
        assert_eq!(num(5110.0), "5110");
        assert_eq!(num(0.1 + 0.2), "0.30000000000000004");
        assert_eq!(escape("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;");
    }

    #[test]
    fn steps() {
        assert_eq!(nice_step(1000.0, 5), 200.0);
        assert_eq!(nice_step(13.0, 5), 5.0);
        assert_eq!(nice_step(0.7, 5), 0.2);
        assert_eq!(nice_step(0.0, 5), 1.0);
    }
}
