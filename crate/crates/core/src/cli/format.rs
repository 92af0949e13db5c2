use num_complex::Complex64;

use crate::dsl::{DslError, Span};

/// `%.12g`-style rendering: 12 significant digits, trailing zeros dropped,
/// scientific notation outside `1e-5 ..= 1e12`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Components below `1e-13` relative to the magnitude are shown as zero.
pub fn fmt_complex(z: Complex64) -> String {
    let snap = 1e-13 * z.norm().max(1.0);
    let re = if z.re.abs() <= snap { 0.0 } else { z.re };
    let im = if z.im.abs() <= snap { 0.0 } else { z.im };
    match (re == 0.0, im == 0.0) {
        (_, true) => fmt_num(re),
        (true, false) => format!("{}i", fmt_num(im)),
        (false, false) => {
            let sign = if im < 0.0 { '-' } else { '+' };
            format!("{}{}{}i", fmt_num(re), sign, fmt_num(im.abs()))
        }
    }
}

pub fn color_enabled() -> bool {
    std::env::var("MQSYM_COLOR").is_ok_and(|v| v == "1")
}

fn paint(text: &str, code: &str, color: bool) -> String {
    if color {
        format!("\x1b[{code}m{text}\x1b[0m")
    } else {
        text.to_string()
    }
}

/// Error message with the offending source line and a caret underline.
pub fn diagnostic(source: &str, origin: &str, message: &str, span: Option<Span>, color: bool) -> String {
    let mut out = format!("{}: {}\n", paint("error", "1;31", color), message);
    let Some(span) = span.filter(|s| s.line > 0) else {
        return out;
    };
    out.push_str(&format!("  --> {origin}:{}:{}\n", span.line, span.column));
    let Some(line) = source.lines().nth(span.line as usize - 1) else {
        return out;
    };
    let gutter = span.line.to_string();
    let pad = " ".repeat(gutter.len());
    let line_chars = line.chars().count() as u32;
    let width = span.length.min(line_chars.saturating_sub(span.column - 1)).max(1) as usize;
    out.push_str(&format!("{pad} |\n{gutter} | {line}\n{pad} | "));
    out.push_str(&" ".repeat(span.column as usize - 1));
    out.push_str(&paint(&"^".repeat(width), "1;31", color));
    out.push('\n');
    out
}

pub fn dsl_diagnostic(source: &str, origin: &str, e: &DslError, color: bool) -> String {
    diagnostic(source, origin, &e.to_string(), Some(e.span), color)
}
