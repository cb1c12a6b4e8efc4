//! Source templates for self-contained probe programs.

use crate::extract::{MethodSignature, Modifier};

pub const PROBE_CLASS: &str = "PermissionProbe";

/// Default argument literal for a parameter type.
pub fn default_literal(ty: &str) -> &'static str {
    match ty {
        "int" | "long" | "short" | "byte" | "Integer" | "Long" | "Short" | "Byte" => "0",
        "float" | "Float" => "0.0f",
        "double" | "Double" => "0.0",
        "boolean" | "Boolean" => "false",
        "char" | "Character" => "'a'",
        "String" | "java.lang.String" | "CharSequence" | "java.lang.CharSequence" => "\"\"",
        _ => "null",
    }
}

/// The single statement that invokes the target.
pub fn invocation(sig: &MethodSignature) -> String {
    let args: Vec<&str> = sig.param_types.iter().map(|t| default_literal(t)).collect();
    let receiver = if sig.modifiers.contains(&Modifier::Static) {
        sig.fq_class.clone()
    } else {
        format!("Harness.instance({}.class)", sig.fq_class)
    };
    format!("{receiver}.{}({});", sig.name, args.join(", "))
}

fn wrap(body: &[String]) -> String {
    let mut out = format!("public class {PROBE_CLASS} {{\n    public static void main(String[] args) {{\n");
    for line in body {
        out.push_str("        ");
        out.push_str(line);
        out.push('\n');
    }
    out.push_str("    }\n}\n");
    out
}

pub fn probe_source(sig: &MethodSignature) -> String {
    wrap(&[invocation(sig)])
}

/// A draft that breaks the self-containment rules: it touches the file
/// system before calling the target.
pub fn broken_probe_source(sig: &MethodSignature) -> String {
    wrap(&["java.io.File scratch = new java.io.File(\"/sdcard/probe.txt\");".into(), invocation(sig)])
}
