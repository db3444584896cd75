use std::sync::Arc;

use polyrag_core::lang::{detect_language, LangTag, LanguageRouter, Translator, TransliterationTranslator};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn transliteration_is_lossless(text in "[ -~]{0,40}[a-zA-Z][ -~]{0,40}", pa in any::<bool>()) {
        let lang = if pa { LangTag::pa() } else { LangTag::ur() };
        let t = TransliterationTranslator;
        let x = t.translate(&text, &LangTag::en(), &lang).unwrap();
        prop_assert_eq!(detect_language(&x).code, lang.code.clone());
        prop_assert_eq!(t.translate(&x, &lang, &LangTag::en()).unwrap(), text.clone());

        // the router sees the same thing end to end
        let router = LanguageRouter::new(Arc::new(TransliterationTranslator));
        let q = router.route_inbound(&x, None).unwrap();
        prop_assert_eq!(&q.english_text, &text);
        prop_assert_eq!(&q.original_lang.code, &lang.code);
        let a = router.route_outbound(&text, &q.original_lang);
        prop_assert!(!a.degraded);
        prop_assert_eq!(a.text, x);
    }
}
