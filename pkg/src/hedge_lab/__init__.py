# SPDX-FileCopyrightText: 2025 Harri Kaimio
#
# SPDX-License-Identifier: BSD-3-Clause

"""Hedging laboratory for autocallable notes and vanilla option books."""

__version__ = "0.1.0"
