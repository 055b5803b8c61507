//! Offline providers for tests and reproducible evaluation.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;

use super::{LlmError, LlmProvider, Message, Role, ROUTE_PREFIX, ROUTE_SEPARATOR};
use crate::retrieval::fnv1a;

/// Which of a document's three described paths to echo.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Variant {
    Historical = 0,
    Fastest = 1,
    Shortest = 2,
}

fn variant(task: &str) -> Variant {
    let task = task.to_lowercase();
    if task.contains("fastest") {
        Variant::Fastest
    } else if task.contains("shortest") {
        Variant::Shortest
    } else {
        Variant::Historical
    }
}

fn follows() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"follows (.+?) \(\d+\.\d+ km\)").expect("static regex"))
}

fn user_text(messages: &[Message]) -> &str {
    messages
        .iter()
        .rev()
        .find(|m| m.role == Role::User)
        .map(|m| m.content.as_str())
        .unwrap_or("")
}

/// Answers with the road names the top-ranked context gives for the path
/// type named in the task ("fastest", "shortest", otherwise the historical
/// path). Without context it answers in prose, with no ROUTE line.
#[derive(Debug, Clone, Default)]
pub struct EchoMock;

impl EchoMock {
    pub fn answer(&self, messages: &[Message]) -> String {
        let text = user_text(messages);
        let task = text.lines().find(|l| l.starts_with("Task:")).unwrap_or("");
        let Some(context) = text.lines().find_map(|l| l.strip_prefix("Context 1: ")) else {
            return "I have no path information for this trip.".to_string();
        };
        let routes: Vec<&str> = follows()
            .captures_iter(context)
            .map(|c| c.get(1).expect("group").as_str())
            .collect();
        let Some(chosen) = routes.get(variant(task) as usize).or(routes.first()) else {
            return "The context does not describe a usable path.".to_string();
        };
        let names: Vec<&str> = chosen.split(", ").collect();
        format!("{ROUTE_PREFIX} {}", names.join(ROUTE_SEPARATOR))
    }
}

impl LlmProvider for EchoMock {
    fn name(&self) -> &str {
        "echo"
    }

    fn complete(&self, messages: &[Message]) -> Result<String, LlmError> {
        Ok(self.answer(messages))
    }
}

const JUNK_FIRST: [&str; 8] = ["Phantom", "Mirage", "Nowhere", "Hollow", "Vapor", "Fable", "Drift", "Lost"];
const JUNK_SUFFIX: [&str; 4] = ["Road", "Lane", "Boulevard", "Way"];

/// [`EchoMock`] that, with probability `junk_rate`, instead names two to
/// four roads that do not exist. The choice is a pure function of the
/// messages and the seed.
#[derive(Debug, Clone)]
pub struct NoisyMock {
    pub junk_rate: f64,
    pub seed: u64,
}

impl NoisyMock {
    pub fn new(junk_rate: f64, seed: u64) -> Self {
        Self { junk_rate, seed }
    }
}

impl LlmProvider for NoisyMock {
    fn name(&self) -> &str {
        "noisy"
    }

    fn complete(&self, messages: &[Message]) -> Result<String, LlmError> {
        let mut h = self.seed;
        for m in messages {
            h ^= fnv1a(m.content.as_bytes());
            h = h.rotate_left(17);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(h);
        if rng.random_bool(self.junk_rate.clamp(0.0, 1.0)) {
            let names: Vec<String> = (0..rng.random_range(2..=4))
                .map(|_| {
                    format!(
                        "{} {}",
                        JUNK_FIRST[rng.random_range(0..JUNK_FIRST.len())],
                        JUNK_SUFFIX[rng.random_range(0..JUNK_SUFFIX.len())]
                    )
                })
                .collect();
            return Ok(format!("{ROUTE_PREFIX} {}", names.join(ROUTE_SEPARATOR)));
        }
        EchoMock.complete(messages)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{assemble_prompt, AugmentedQuery};

    const DOC: &str = "Path information from A to B: The historical path taken by previous drivers follows \
        Elm Street, Oak Avenue (1.20 km). The fastest path follows Ring Road (1.50 km). The shortest path \
        follows Elm Street, Pine Road (1.00 km).";

    fn ask(constraint: &str, docs: &[&str]) -> Vec<Message> {
        let a = AugmentedQuery {
            instruction: "i".into(),
            body: format!("Recommend the {constraint} path from A to B."),
        };
        assemble_prompt(&a, docs).messages()
    }

    #[test]
    fn echo_picks_variant_from_top_context() {
        let other = DOC.replace("Elm Street, Oak Avenue", "Cedar Street");
        assert_eq!(EchoMock.answer(&ask("fastest", &[DOC, &other])), "ROUTE: Ring Road");
        assert_eq!(EchoMock.answer(&ask("shortest", &[DOC])), "ROUTE: Elm Street -> Pine Road");
        assert_eq!(EchoMock.answer(&ask("most scenic", &[DOC])), "ROUTE: Elm Street -> Oak Avenue");
        assert_eq!(EchoMock.answer(&ask("most scenic", &[&other, DOC])), "ROUTE: Cedar Street");
        assert!(!EchoMock.answer(&ask("fastest", &[])).contains("ROUTE:"));
        assert!(!EchoMock.answer(&ask("fastest", &["no paths here"])).contains("ROUTE:"));
    }

    #[test]
    fn noisy_rate_and_purity() {
        let noisy = NoisyMock::new(0.5, 3);
        let mut junk = 0;
        for i in 0..400 {
            let m = ask(&format!("most scenic {i}"), &[DOC]);
            let a = noisy.complete(&m).unwrap();
            assert_eq!(a, noisy.complete(&m).unwrap());
            assert!(a.starts_with("ROUTE: "));
            if a != "ROUTE: Elm Street -> Oak Avenue" {
                junk += 1;
            }
        }
        assert!((150..250).contains(&junk), "junk count {junk}");
        let never = NoisyMock::new(0.0, 3);
        assert_eq!(never.complete(&ask("fastest", &[DOC])).unwrap(), "ROUTE: Ring Road");
    }
}
