"""Universal elliptic KZB connection at finite truncation degree.

Modules:
  lie_core          presented graded Lie algebras, envelopes, derivations
  special_fn        theta functions, Eisenstein series, k and g jets
  kzb_connection    the connection K_i, Delta and its flatness residuals
  assoc_monodromy   KZ associator, elliptic generators, monodromy
  realizations      sl_N differential-operator realizations
  cherednik         rational Cherednik algebras, characters, DAHA check
  cli               batch driver
"""
__version__ = "0.1.0"
