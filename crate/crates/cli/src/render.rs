//! Text rendering of battery reports, mirroring the two-column
//! before/after-equalization layout.

use neurokey_randsuite::{SuiteReport, TestId, TestResult, TestStatus};

fn p_list(result: &TestResult, indices: &[usize]) -> String {
    let values: Vec<String> = indices
        .iter()
        .map(|&i| format!("{:.3}", result.p_values[i]))
        .collect();
    values.join(", ")
}

fn cell(result: &TestResult, part: Option<&str>) -> String {
    match &result.status {
        TestStatus::NotApplicable(_) => "n/a".to_string(),
        TestStatus::Applied => {
            let verdict = if result.family_pass() == Some(true) {
                "pass"
            } else {
                "FAIL"
            };
            let body = match (result.id, part) {
                (TestId::CumulativeSums, Some(which)) => {
                    let idx = usize::from(which == "bwd");
                    format!("{:.3}", result.p_values[idx])
                }
                (TestId::NonOverlappingTemplate, _) => {
                    let failing = result.passes().iter().filter(|&&ok| !ok).count();
                    format!(
                        "min {:.3} ({} templates, {failing} below alpha)",
                        result.min_p().unwrap_or(f64::NAN),
                        result.p_values.len()
                    )
                }
                (TestId::RandomExcursions | TestId::RandomExcursionsVariant, _) => {
                    let all: Vec<usize> = (0..result.p_values.len()).collect();
                    p_list(result, &all)
                }
                _ => {
                    let all: Vec<usize> = (0..result.p_values.len()).collect();
                    p_list(result, &all)
                }
            };
            format!("{body} [{verdict}]")
        }
    }
}

/// Two-column table over all fifteen tests, one row per test with the
/// cumulative sums split into forward and backward rows.
pub fn suite_table(before: &SuiteReport, after: &SuiteReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:>3} {:38} {:50} {}\n",
        "#", "test", "before equalization", "after distillation"
    ));
    for id in TestId::ALL {
        let b = before.result(id);
        let a = after.result(id);
        if id == TestId::CumulativeSums {
            for part in ["fwd", "bwd"] {
                out.push_str(&format!(
                    "{:>3} {:38} {:50} {}\n",
                    id.number(),
                    format!("{} ({part})", id.name()),
                    cell(b, Some(part)),
                    cell(a, Some(part)),
                ));
            }
        } else {
            out.push_str(&format!(
                "{:>3} {:38} {:50} {}\n",
                id.number(),
                id.name(),
                cell(b, None),
                cell(a, None),
            ));
        }
    }
    out
}
