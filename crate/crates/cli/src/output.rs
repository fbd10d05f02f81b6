use serde::Serialize;

/// One compact JSON document per line.
pub fn json_line<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string(value).expect("report types serialize"));
}

pub fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.6}"))
}
