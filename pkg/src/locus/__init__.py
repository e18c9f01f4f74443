"""Fault localization toolkit: SBFL, MBFL, predicate switching and stack-trace techniques."""
