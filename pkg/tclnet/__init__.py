"""
TCLNet: temporal complementary learning for video re-identification at desk scale

This software is released under the
Mozilla Public License, version 2.0; see LICENSE.
"""

__version__ = '0.1.0'
__date__ = '2026-10-18'
