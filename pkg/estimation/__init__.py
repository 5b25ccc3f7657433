# Estimation package
