//! Seeded synthetic corpus generator for five languages (en, fr, es, de, vi).
//!
//! Used by the examples, the benchmark CLI, and the test suites: the sandbox
//! has no access to real social-media data, so demos and the desk-scale
//! experiments run on generated short messages instead. Word frequencies
//! follow a Zipf-like curve and optional noise tokens (URLs, @mentions,
//! #hashtags) mimic the character noise of real short messages.

use crate::corpus::LabeledText;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const LANGUAGES: [&str; 5] = ["en", "fr", "es", "de", "vi"];

const EN: &[&str] = &[
    "the", "of", "and", "to", "in", "is", "you", "that", "it", "he", "was", "for", "on", "are",
    "with", "as", "his", "they", "be", "at", "one", "have", "this", "from", "or", "had", "by",
    "hot", "word", "but", "what", "some", "we", "can", "out", "other", "were", "all", "there",
    "when", "up", "use", "your", "how", "said", "an", "each", "she", "which", "do", "their",
    "time", "if", "will", "way", "about", "many", "then", "them", "write", "would", "like",
    "so", "these", "her", "long", "make", "thing", "see", "him", "two", "has", "look", "more",
    "day", "could", "go", "come", "did", "number", "sound", "no", "most", "people", "my",
    "over", "know", "water", "than", "call", "first", "who", "may", "down", "side", "been",
    "now", "find", "any", "new", "work", "part", "take", "get", "place", "made", "live",
];
const FR: &[&str] = &[
    "le", "de", "un", "être", "et", "à", "il", "avoir", "ne", "je", "son", "que", "se", "qui",
    "ce", "dans", "en", "du", "elle", "au", "pour", "pas", "vous", "par", "sur", "faire",
    "plus", "dire", "me", "on", "mon", "lui", "nous", "comme", "mais", "pouvoir", "avec",
    "tout", "y", "aller", "voir", "bien", "où", "sans", "tu", "ou", "leur", "homme", "si",
    "deux", "mari", "moi", "vouloir", "te", "femme", "venir", "quand", "grand", "celui",
    "notre", "devoir", "là", "jour", "prendre", "même", "votre", "rien", "petit", "aussi",
    "chose", "dont", "très", "donner", "cette", "encore", "monde", "après", "trouver",
    "personne", "rendre", "dieu", "toujours", "maintenant", "çà", "autre", "depuis",
    "beaucoup", "année", "déjà", "bon", "nouveau", "français", "toujours", "heure",
];
const ES: &[&str] = &[
    "el", "la", "de", "que", "y", "a", "en", "un", "ser", "se", "no", "haber", "por", "con",
    "su", "para", "como", "estar", "tener", "le", "lo", "todo", "pero", "más", "hacer", "o",
    "poder", "decir", "este", "ir", "otro", "ese", "si", "me", "ya", "ver", "porque", "dar",
    "cuando", "él", "muy", "sin", "vez", "mucho", "saber", "qué", "sobre", "mi", "alguno",
    "mismo", "yo", "también", "hasta", "año", "dos", "querer", "entre", "así", "primero",
    "desde", "grande", "eso", "ni", "nos", "llegar", "pasar", "tiempo", "ella", "sí", "día",
    "uno", "bien", "poco", "deber", "entonces", "poner", "cosa", "tanto", "hombre", "parecer",
    "nuestro", "tan", "donde", "ahora", "parte", "después", "vida", "quedar", "siempre",
    "creer", "hablar", "llevar", "dejar", "nada", "cada", "seguir", "menos", "nuevo",
];
const DE: &[&str] = &[
    "der", "die", "und", "in", "den", "von", "zu", "das", "mit", "sich", "des", "auf", "für",
    "ist", "im", "dem", "nicht", "ein", "eine", "als", "auch", "es", "an", "werden", "aus",
    "er", "hat", "daß", "sie", "nach", "wird", "bei", "einer", "um", "am", "sind", "noch",
    "wie", "einem", "über", "einen", "so", "zum", "war", "haben", "nur", "oder", "aber",
    "vor", "zur", "bis", "mehr", "durch", "man", "sein", "wurde", "sei", "schön", "wenn",
    "ich", "du", "wir", "ihr", "können", "müssen", "sollen", "wollen", "machen", "jahr",
    "zeit", "mensch", "tag", "land", "frage", "möglich", "während", "natürlich", "zwischen",
    "heute", "immer", "schon", "gegen", "ganz", "viele", "große", "neue", "gibt", "unsere",
    "dieser", "könnte", "würde", "müßte", "straße", "über", "für", "grün", "fünf", "zwölf",
];
const VI: &[&str] = &[
    "của", "và", "các", "có", "được", "trong", "đã", "cho", "là", "không", "người", "những",
    "với", "một", "này", "để", "khi", "đến", "từ", "như", "cũng", "ra", "về", "năm", "làm",
    "thì", "nhiều", "tại", "nhà", "việc", "trên", "phải", "đó", "nước", "lại", "sẽ", "vào",
    "theo", "còn", "sau", "ông", "bị", "đi", "anh", "em", "rất", "hay", "nên", "thế", "mới",
    "ngày", "nói", "biết", "chỉ", "ai", "thể", "rồi", "số", "thành", "đang", "trước", "mình",
    "lên", "đều", "bạn", "vì", "nhất", "đây", "hơn", "thấy", "giờ", "học", "ở", "chúng",
    "họ", "gì", "tôi", "bài", "quá", "vẫn", "điều", "muốn", "xem", "hai", "qua", "cả",
    "chưa", "lúc", "mà", "nữa", "tốt", "yêu", "đẹp", "vui", "mừng", "sinh", "nhật", "cảm",
];

fn word_list(lang: &str) -> &'static [&'static str] {
    match lang {
        "en" => EN,
        "fr" => FR,
        "es" => ES,
        "de" => DE,
        "vi" => VI,
        other => panic!("no word list for language '{other}'"),
    }
}

/// Zipf-like draw: weight of rank i proportional to 1/(i+1).
fn zipf_index(rng: &mut ChaCha8Rng, n: usize) -> usize {
    let total: f64 = (0..n).map(|i| 1.0 / (i + 1) as f64).sum();
    let mut target = rng.gen::<f64>() * total;
    for i in 0..n {
        target -= 1.0 / (i + 1) as f64;
        if target <= 0.0 {
            return i;
        }
    }
    n - 1
}

/// One clean sentence in `lang`: 4-9 Zipf-sampled words, occasional leading
/// capital and trailing punctuation.
pub fn sentence(rng: &mut ChaCha8Rng, lang: &str) -> String {
    let words = word_list(lang);
    let len = rng.gen_range(4..=9);
    let mut parts: Vec<String> = (0..len)
        .map(|_| words[zipf_index(rng, words.len())].to_string())
        .collect();
    if rng.gen::<f64>() < 0.5 {
        let mut chars = parts[0].chars();
        if let Some(first) = chars.next() {
            parts[0] = first.to_uppercase().collect::<String>() + chars.as_str();
        }
    }
    let mut s = parts.join(" ");
    if rng.gen::<f64>() < 0.4 {
        s.push(['.', '!', '?'][rng.gen_range(0..3)]);
    }
    s
}

/// A random shortened URL, the dominant noise token in short messages.
pub fn url(rng: &mut ChaCha8Rng) -> String {
    const ALNUM: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
    let tail: String = (0..10)
        .map(|_| ALNUM[rng.gen_range(0..ALNUM.len())] as char)
        .collect();
    format!("https://t.co/{tail}")
}

fn mention(rng: &mut ChaCha8Rng) -> String {
    const ALNUM: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789_";
    let tail: String = (0..rng.gen_range(5..12))
        .map(|_| ALNUM[rng.gen_range(0..ALNUM.len())] as char)
        .collect();
    format!("@{tail}")
}

fn hashtag(rng: &mut ChaCha8Rng, lang: &str) -> String {
    let words = word_list(lang);
    let a = words[rng.gen_range(0..words.len())];
    let b = words[rng.gen_range(0..words.len())];
    format!("#{a}{b}")
}

/// A short noisy message: a sentence with probability `noise_prob` of an
/// injected URL, @mention, or #hashtag.
pub fn message(rng: &mut ChaCha8Rng, lang: &str, noise_prob: f64) -> String {
    let mut s = sentence(rng, lang);
    if rng.gen::<f64>() < noise_prob {
        let noise = match rng.gen_range(0..3) {
            0 => url(rng),
            1 => mention(rng),
            _ => hashtag(rng, lang),
        };
        if rng.gen::<f64>() < 0.5 {
            s = format!("{noise} {s}");
        } else {
            s = format!("{s} {noise}");
        }
    }
    s
}

/// A balanced labeled set: `per_lang` messages per language, language-major
/// order (shuffle downstream if needed).
pub fn labeled_set(rng: &mut ChaCha8Rng, per_lang: usize, noise_prob: f64) -> Vec<LabeledText> {
    let mut out = Vec::with_capacity(per_lang * LANGUAGES.len());
    for lang in LANGUAGES {
        for _ in 0..per_lang {
            out.push(LabeledText::new(message(rng, lang, noise_prob), lang));
        }
    }
    out
}

/// One tweet-shaped JSONL line. With probability `mismatch_prob` the declared
/// language disagrees with the detected one (so the agreement filter drops it).
pub fn jsonl_line(rng: &mut ChaCha8Rng, id: u64, mismatch_prob: f64) -> String {
    let lang = LANGUAGES[rng.gen_range(0..LANGUAGES.len())];
    let declared = if rng.gen::<f64>() < mismatch_prob {
        let mut other = LANGUAGES[rng.gen_range(0..LANGUAGES.len())];
        while other == lang {
            other = LANGUAGES[rng.gen_range(0..LANGUAGES.len())];
        }
        other
    } else {
        lang
    };
    let text = message(rng, lang, 0.15);
    serde_json::json!({
        "id": id.to_string(),
        "text": text,
        "lang": lang,
        "user": {"id": format!("u{id}"), "lang": declared},
    })
    .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;

    #[test]
    fn deterministic_under_seed() {
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        for lang in LANGUAGES {
            assert_eq!(message(&mut a, lang, 0.3), message(&mut b, lang, 0.3));
        }
    }

    #[test]
    fn languages_use_distinct_character_sets() {
        let vi: String = VI.join("");
        assert!(!vi.is_ascii());
        let de: String = DE.join("");
        assert!(de.chars().any(|c| "äöüß".contains(c)));
    }

    #[test]
    fn jsonl_lines_parse_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for i in 0..50 {
            let line = jsonl_line(&mut rng, i, 0.5);
            let v: serde_json::Value = serde_json::from_str(&line).unwrap();
            assert!(!v["text"].as_str().unwrap().is_empty());
        }
    }
}
