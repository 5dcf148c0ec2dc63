use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CorpusError, CorpusRecord, RetryPolicy};
use crate::filters::Label;
use crate::message::{parse_address, EmailAddress, EmailMessage, IpAddress};
use crate::netsim::Micros;

const SPAM_ROOTS: &[&str] = &[
    "cash", "prize", "winner", "casino", "pills", "offer", "bonus", "credit", "loan", "deal",
    "free", "lottery", "crypto", "discount", "urgent", "claim",
];
const HAM_ROOTS: &[&str] = &[
    "meeting", "report", "project", "budget", "schedule", "review", "agenda", "team", "draft",
    "invoice", "lunch", "notes", "deadline", "client", "update", "plan",
];
const COMMON: &[&str] = &["the", "and", "you", "for", "this", "with", "your", "please"];

pub const SPAMMER_IP: IpAddress = IpAddress::new(10, 0, 0, 66);
const SPAMMER_HELO: &str = "bulk-offers.example";
const SPAMMER_FROM: &str = "offers@bulk-offers.example";
const RECIPIENT_DOMAIN: &str = "b.example";
const HAM_CLIENTS: u8 = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorParams {
    pub seed: u64,
    pub count: usize,
    pub spam_ratio: f64,
    /// Number of spam templates; each spam body is one of them verbatim.
    pub distinct_spam_bodies: usize,
    pub spam_vocab: usize,
    pub ham_vocab: usize,
    pub body_words_min: usize,
    pub body_words_max: usize,
    pub max_recipients: usize,
    pub interval: Micros,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            seed: 1,
            count: 1000,
            spam_ratio: 0.5,
            distinct_spam_bodies: 1,
            spam_vocab: 64,
            ham_vocab: 64,
            body_words_min: 20,
            body_words_max: 60,
            max_recipients: 1,
            interval: Micros::from_secs(1),
        }
    }
}

impl GeneratorParams {
    /// Every message is spam with one shared body: the bulk-campaign case.
    pub fn blast(count: usize, seed: u64) -> Self {
        GeneratorParams {
            seed,
            count,
            spam_ratio: 1.0,
            distinct_spam_bodies: 1,
            ..GeneratorParams::default()
        }
    }

    pub fn spam_count(&self) -> usize {
        (self.count as f64 * self.spam_ratio).round() as usize
    }

    fn validate(&self) -> Result<(), CorpusError> {
        let bad = |m: &str| Err(CorpusError::InvalidParams(m.to_string()));
        if self.count == 0 {
            return bad("count must be positive");
        }
        if !(0.0..=1.0).contains(&self.spam_ratio) {
            return bad("spam_ratio must lie in [0, 1]");
        }
        let spam = self.spam_count();
        if spam > 0 && !(1..=spam).contains(&self.distinct_spam_bodies) {
            return bad("distinct_spam_bodies must be between 1 and the spam count");
        }
        if self.spam_vocab == 0 || self.ham_vocab == 0 {
            return bad("vocabulary sizes must be positive");
        }
        if self.body_words_min == 0 || self.body_words_min > self.body_words_max {
            return bad("body length range must satisfy 1 <= min <= max");
        }
        if self.max_recipients == 0 {
            return bad("max_recipients must be positive");
        }
        Ok(())
    }
}

fn vocabulary(roots: &[&str], size: usize) -> Vec<String> {
    (0..size)
        .map(|k| match k / roots.len() {
            0 => roots[k % roots.len()].to_string(),
            n => format!("{}{n}", roots[k % roots.len()]),
        })
        .collect()
}

fn words(rng: &mut ChaCha8Rng, vocab: &[String], n: usize) -> Vec<String> {
    (0..n)
        .map(|_| {
            if rng.random_bool(0.25) {
                COMMON[rng.random_range(0..COMMON.len())].to_string()
            } else {
                vocab[rng.random_range(0..vocab.len())].clone()
            }
        })
        .collect()
}

fn addr(text: &str) -> EmailAddress {
    parse_address(text).expect("generated address is well formed")
}

/// Deterministic for a given parameter set.
pub fn generate_corpus(params: &GeneratorParams) -> Result<Vec<CorpusRecord>, CorpusError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let spam_words = vocabulary(SPAM_ROOTS, params.spam_vocab);
    let ham_words = vocabulary(HAM_ROOTS, params.ham_vocab);
    let spam_count = params.spam_count();

    let mut is_spam = vec![false; params.count];
    for i in sample(&mut rng, params.count, spam_count) {
        is_spam[i] = true;
    }

    let body_len = |rng: &mut ChaCha8Rng| rng.random_range(params.body_words_min..=params.body_words_max);
    let templates: Vec<(String, String)> = (0..if spam_count > 0 { params.distinct_spam_bodies } else { 0 })
        .map(|t| {
            let n = body_len(&mut rng);
            let subject = words(&mut rng, &spam_words, 3).join(" ");
            let mut body = words(&mut rng, &spam_words, n);
            body.push(format!("campaign{t}"));
            (subject, body.join(" "))
        })
        .collect();

    let mut records = Vec::with_capacity(params.count);
    let mut next_rcpt = 0usize;
    let mut spam_seen = 0usize;
    for (i, &spam) in is_spam.iter().enumerate() {
        let n_rcpt = rng.random_range(1..=params.max_recipients);
        let rcpt: Vec<EmailAddress> = (0..n_rcpt)
            .map(|k| addr(&format!("user{}@{RECIPIENT_DOMAIN}", next_rcpt + k)))
            .collect();
        next_rcpt += n_rcpt;
        let at = params.interval * i as u64;
        let id = format!("msg-{i:06}");
        let record = if spam {
            let (subject, body) = &templates[spam_seen % templates.len()];
            spam_seen += 1;
            CorpusRecord {
                message: EmailMessage::new(id, SPAMMER_IP, SPAMMER_HELO, addr(SPAMMER_FROM), rcpt, subject.clone(), body.clone(), at)
                    .expect("generated message is valid"),
                label: Label::Spam,
                retry: RetryPolicy::None,
            }
        } else {
            let client = rng.random_range(1..=HAM_CLIENTS);
            let n = body_len(&mut rng);
            let subject = words(&mut rng, &ham_words, 3).join(" ");
            let body = words(&mut rng, &ham_words, n).join(" ");
            CorpusRecord {
                message: EmailMessage::new(
                    id,
                    IpAddress::new(10, 0, 0, client),
                    "a.example",
                    addr(&format!("staff{client}@a.example")),
                    rcpt,
                    subject,
                    body,
                    at,
                )
                .expect("generated message is valid"),
                label: Label::Ham,
                retry: RetryPolicy::RetryOnce,
            }
        };
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::message::content_digest;
    use std::collections::HashSet;

    #[test]
    fn same_seed_same_corpus() {
        let p = GeneratorParams { count: 200, ..GeneratorParams::default() };
        assert_eq!(generate_corpus(&p).unwrap(), generate_corpus(&p).unwrap());
        let q = GeneratorParams { seed: 2, ..p.clone() };
        assert_ne!(generate_corpus(&p).unwrap(), generate_corpus(&q).unwrap());
    }

    #[test]
    fn blast_is_one_body() {
        let c = generate_corpus(&GeneratorParams::blast(1000, 7)).unwrap();
        assert_eq!(c.len(), 1000);
        assert!(c.iter().all(|r| r.label == Label::Spam));
        let digests: HashSet<_> = c.iter().map(|r| content_digest(&r.message)).collect();
        assert_eq!(digests.len(), 1);
    }

    #[test]
    fn zero_ratio_is_all_ham() {
        let p = GeneratorParams { count: 50, spam_ratio: 0.0, ..GeneratorParams::default() };
        let c = generate_corpus(&p).unwrap();
        assert!(c.iter().all(|r| r.label == Label::Ham && r.retry == RetryPolicy::RetryOnce));
    }

    #[test]
    fn spam_count_and_templates() {
        let p = GeneratorParams { count: 100, spam_ratio: 0.3, distinct_spam_bodies: 4, ..GeneratorParams::default() };
        let c = generate_corpus(&p).unwrap();
        let spam: Vec<_> = c.iter().filter(|r| r.label == Label::Spam).collect();
        assert_eq!(spam.len(), 30);
        let digests: HashSet<_> = spam.iter().map(|r| content_digest(&r.message)).collect();
        assert_eq!(digests.len(), 4);
    }

    #[test]
    fn rejects_bad_params() {
        for p in [
            GeneratorParams { count: 0, ..GeneratorParams::default() },
            GeneratorParams { spam_ratio: 1.5, ..GeneratorParams::default() },
            GeneratorParams { count: 10, spam_ratio: 0.2, distinct_spam_bodies: 3, ..GeneratorParams::default() },
            GeneratorParams { body_words_min: 9, body_words_max: 3, ..GeneratorParams::default() },
        ] {
            assert!(matches!(generate_corpus(&p), Err(CorpusError::InvalidParams(_))));
        }
    }

    #[test]
    fn recipients_are_distinct_across_corpus() {
        let p = GeneratorParams { count: 40, max_recipients: 3, ..GeneratorParams::default() };
        let c = generate_corpus(&p).unwrap();
        let mut seen = HashSet::new();
        for r in &c {
            for a in r.message.rcpt() {
                assert!(seen.insert(a.clone()));
            }
        }
    }
}
