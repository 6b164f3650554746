"""glos: Polish speech processing toolkit.

Rule-based grapheme-to-phoneme conversion, MFCC features, monophone
GMM-HMM acoustic models, forced alignment (short and long form), voice
activity detection, speaker diarization, keyword spotting, and the file
formats and services that tie them together.
"""

__version__ = "0.1.0"
