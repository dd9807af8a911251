"""Cookie-consent audit engine.

Evaluates captured browsing sessions against the 22 low-level requirements
for valid consent: automated checkers where verification is technically
possible, evidence scans plus an operator checklist for the rest.
"""

__version__ = "0.1.0"
