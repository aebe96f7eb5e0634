#pragma once

#include <string>
#include <vector>

// Pinned tokenizer behavior under the default configuration (bundled
// stopwords, lengths 3..15, URLs and mentions stripped, lowercasing on).
struct TokenizerGolden {
  const char* name;
  std::string input;
  std::vector<std::string> expected;
};

inline const std::vector<TokenizerGolden>& tokenizer_golden_cases() {
  static const std::vector<TokenizerGolden> cases{
      {"mention_url_stopword", "@user check http://t.co/x Flooding in Calgary", {"check", "flooding", "calgary"}},
      {"all_two_letter", "ok go hi", {}},
      {"empty", "", {}},
      {"only_whitespace", "   \t\n  ", {}},
      {"www_prefix", "www.example.com flood warning", {"flood", "warning"}},
      {"bare_tco_path", "see t.co/abc123 now", {"see", "now"}},
      {"uppercase_scheme", "HTTPS://Example.org/path evacuate", {"evacuate"}},
      {"uppercase_www", "WWW.Site.COM shelter", {"shelter"}},
      {"several_schemes", "http://a.b https://c.d ftp://e.f", {}},
      {"hashtags_keep_word", "#yycflood #Calgary", {"yycflood", "calgary"}},
      {"mentions_and_lone_at", "@redcross @ fema", {"fema"}},
      {"retweet_prefix", "RT @abc: Storm hits!!", {"storm", "hits"}},
      {"embedded_at_is_not_mention", "me@site.org wrote", {"me@site.org", "wrote"}},
      {"two_chars_dropped", "xx yyy", {"yyy"}},
      {"three_chars_kept", "abc de fgh", {"abc", "fgh"}},
      {"fifteen_kept_sixteen_dropped", "abcdefghijklmno abcdefghijklmnop", {"abcdefghijklmno"}},
      {"length_after_stripping", "!!ab!! ((abc))", {"abc"}},
      {"stopwords", "the storm and the flood", {"storm", "flood"}},
      {"uppercase_stopwords", "THE Storm IS Here", {"storm"}},
      {"wrapped_in_parens", "(flooding)", {"flooding"}},
      {"quotes", "'quoted' \"words\"", {"quoted", "words"}},
      {"inner_hyphen_kept", "Power-outage reported", {"power-outage", "reported"}},
      {"inner_apostrophe_kept", "storm's coming", {"storm's", "coming"}},
      {"apostrophe_stopword", "don't panic", {"panic"}},
      {"two_scalar_accent_dropped", "aé abé", {"abé"}},
      {"sixteen_scalars_dropped",
       "ééééééééééééééé "
       "éééééééééééééééé",
       {"ééééééééééééééé"}},
      {"curly_quotes", "“Evacuate now”", {"evacuate", "now"}},
      {"ideographic_space", "flood　help", {"flood", "help"}},
      {"ascii_only_lowercasing", "ÉCOLE fermée", {"École", "fermée"}},
      {"punctuation_only", "# @ !!! --", {}},
  };
  return cases;
}
